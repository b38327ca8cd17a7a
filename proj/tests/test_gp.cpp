#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/LU>

#include "bocl/bench.hpp"
#include "bocl/gp.hpp"

using namespace bocl;

namespace {

struct Fixture {
  Dataset data;
  KernelParams params;
  double noise;
};

Fixture random_fixture(std::uint64_t seed, std::size_t n, std::size_t d, KernelFamily fam = KernelFamily::Matern52) {
  RngStream rng(seed);
  std::vector<Point> X;
  std::vector<double> y;
  for (std::size_t i = 0; i < n; ++i) {
    Point x(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) x[static_cast<Eigen::Index>(k)] = rng.uniform();
    X.push_back(x);
    y.push_back(std::sin(5 * x.sum()) + 0.3 * x.squaredNorm());
  }
  Eigen::VectorXd ell(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) ell[static_cast<Eigen::Index>(k)] = rng.uniform(0.2, 0.6);
  return {Dataset::from_raw(X, y), KernelParams(fam, rng.uniform(0.5, 2.0), ell), 1e-6};
}

Point random_point(std::size_t d, RngStream& rng) {
  Point x(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) x[static_cast<Eigen::Index>(k)] = rng.uniform();
  return x;
}

// Dense oracle with an explicit inverse.
struct Dense {
  Eigen::MatrixXd Kinv;
  Eigen::VectorXd y;
  const std::vector<Point>* X;
  KernelParams p;

  Dense(const Dataset& d, const KernelParams& params, double noise) : X(&d.points()), p(params) {
    Kinv = kernel_matrix(params, d.points(), noise).inverse();
    y = Eigen::Map<const Eigen::VectorXd>(d.targets().data(), static_cast<Eigen::Index>(d.size()));
  }
  Eigen::VectorXd kv(const Point& x) const { return kernel_vector(p, *X, x); }
  double mean(const Point& x) const { return kv(x).dot(Kinv * y); }
  double var(const Point& x) const { return kernel_eval(p, x, x) - kv(x).dot(Kinv * kv(x)); }
  double cov(const Point& a, const Point& b) const { return kernel_eval(p, a, b) - kv(a).dot(Kinv * kv(b)); }
};

}  // namespace

TEST(GpPredict, NearInterpolationAtTrainingPoints) {
  auto f = random_fixture(1, 15, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e-6);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    const auto m = g.predict(f.data.points()[i]);
    EXPECT_LE(std::abs(m.mean - f.data.targets()[i]), 1e-3);
    EXPECT_LE(m.variance, 2e-6);
  }
}

TEST(GpPredict, PriorReversionFarAway) {
  auto f = random_fixture(2, 12, 2, KernelFamily::SquaredExponential);
  const auto g = GpPosterior::build(f.data, f.params, 1e-6);
  const Point far = Point::Constant(2, 1.0 + 10.0 * f.params.lengthscales.maxCoeff() * 2);
  const auto m = g.predict(far);
  EXPECT_NEAR(m.mean, 0.0, 1e-6);
  EXPECT_NEAR(m.variance, f.params.signal_variance, 1e-6);
}

TEST(GpPredict, MatchesDenseInverse) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto f = random_fixture(10 + s, 20, 3);
    const auto g = GpPosterior::build(f.data, f.params, 1e-4);
    const Dense o(f.data, f.params, 1e-4);
    RngStream rng(s);
    for (int t = 0; t < 20; ++t) {
      const Point x = random_point(3, rng);
      const auto m = g.predict(x);
      EXPECT_NEAR(m.mean, o.mean(x), 1e-8);
      EXPECT_NEAR(m.variance, std::max(0.0, o.var(x)), 1e-8);
    }
  }
}

TEST(GpPosteriorCov, DiagonalEqualsVariance) {
  auto f = random_fixture(3, 10, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e-6);
  RngStream rng(8);
  const Point x = random_point(2, rng);
  EXPECT_NEAR(g.posterior_cov(x, x), g.predict(x).variance, 1e-12);
}

TEST(GpPosteriorCov, HugeNoiseApproachesPrior) {
  auto f = random_fixture(4, 10, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e8);
  RngStream rng(9);
  const Point a = random_point(2, rng), b = random_point(2, rng);
  EXPECT_NEAR(g.posterior_cov(a, b), kernel_eval(f.params, a, b), 1e-6);
}

TEST(GpPosteriorCov, MatchesDenseOracle) {
  auto f = random_fixture(5, 25, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e-4);
  const Dense o(f.data, f.params, 1e-4);
  RngStream rng(10);
  for (int t = 0; t < 20; ++t) {
    const Point a = random_point(2, rng), b = random_point(2, rng);
    EXPECT_NEAR(g.posterior_cov(a, b), o.cov(a, b), 1e-8);
  }
}

TEST(GpCondition, VarianceAtConditionedPoint) {
  // Single far-away observation: var(x_star) is 1 to machine precision.
  Dataset d(std::vector<Point>{Point::Constant(1, 50.0)}, std::vector<double>{0.0});
  const auto g = GpPosterior::build(d, KernelParams::isotropic(KernelFamily::SquaredExponential, 1.0, 1.0, 1), 1e-6);
  const Point xs = Point::Zero(1);
  const double var = g.predict(xs).variance;
  ASSERT_NEAR(var, 1.0, 1e-15);
  const double after = g.condition(xs, 0.3).predict(xs).variance;
  EXPECT_NEAR(after, var * 1e-6 / (var + 1e-6), 1e-12);
  EXPECT_NEAR(after, 9.99999e-7, 1e-12);
}

TEST(GpCondition, KrigingBelieverLeavesMeanUnchanged) {
  auto f = random_fixture(6, 20, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e-6);
  RngStream rng(11);
  const Point xs = random_point(2, rng);
  const auto h = g.condition(xs, g.predict(xs).mean);
  for (int t = 0; t < 100; ++t) {
    const Point x = random_point(2, rng);
    EXPECT_NEAR(h.predict(x).mean, g.predict(x).mean, 1e-8);
  }
}

TEST(GpCondition, MatchesFullRefit) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::size_t d = s % 3 == 0 ? 1 : (s % 3 == 1 ? 2 : 6);
    auto f = random_fixture(100 + s, 5 + 3 * s, d);
    const auto g = GpPosterior::build(f.data, f.params, 1e-6);
    RngStream rng(200 + s);
    const Point xs = random_point(d, rng);
    const double y = rng.normal();
    const auto h = g.condition(xs, y);
    const auto r = GpPosterior::build(f.data.augmented(xs, y), f.params, 1e-6);
    for (int t = 0; t < 100; ++t) {
      const Point x = random_point(d, rng);
      const auto a = h.predict(x), b = r.predict(x);
      EXPECT_NEAR(a.mean, b.mean, 1e-8);
      EXPECT_NEAR(a.variance, b.variance, 1e-8);
    }
  }
}

TEST(GpCondition, OriginalUnchanged) {
  auto f = random_fixture(7, 10, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e-6);
  const Point x = Point::Constant(2, 0.5);
  const auto before = g.predict(x);
  (void)g.condition(x, -1.0);
  EXPECT_EQ(g.size(), 10u);
  EXPECT_EQ(g.predict(x).mean, before.mean);
  EXPECT_EQ(g.predict(x).variance, before.variance);
}

TEST(GpCondition, RejectsBadInput) {
  auto f = random_fixture(8, 10, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e-6);
  EXPECT_THROW(g.condition(Point::Zero(3), 0.0), InvalidInput);
  EXPECT_THROW(g.condition(Point::Zero(2), NAN), InvalidInput);
}

TEST(GpLml, MatchesDenseFormula) {
  auto f = random_fixture(9, 15, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e-3);
  const auto K = kernel_matrix(f.params, f.data.points(), 1e-3);
  const Eigen::Map<const Eigen::VectorXd> y(f.data.targets().data(), 15);
  const double expected =
      -0.5 * y.dot(K.inverse() * y) - 0.5 * std::log(K.determinant()) - 7.5 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(g.log_marginal_likelihood(), expected, 1e-7);
}

TEST(GpFit, RecoversLengthscale) {
  int ok = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    RngStream rng(300 + s);
    const std::size_t d = 2;
    std::vector<Point> X;
    for (int i = 0; i < 40; ++i) X.push_back(random_point(d, rng));
    const auto p = KernelParams::isotropic(KernelFamily::Matern52, 1.0, 0.3, d);
    const Eigen::MatrixXd K = kernel_matrix(p, X, 1e-6);
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(K).matrixL();
    Eigen::VectorXd z(40);
    for (int i = 0; i < 40; ++i) z[i] = rng.normal();
    const Eigen::VectorXd f = L * z;
    const auto data = Dataset::from_raw(X, std::vector<double>(f.data(), f.data() + 40));
    RngStream fr = rng.substream("fit");
    const auto g = fit_gp(data, fr);
    const auto& ell = g.params().lengthscales;
    if ((ell.array() >= 0.1).all() && (ell.array() <= 0.9).all()) ++ok;
  }
  EXPECT_GE(ok, 4);
}

TEST(GpFit, TwoPointsWithinBounds) {
  std::vector<Point> X{Point::Constant(2, 0.1), Point::Constant(2, 0.9)};
  const auto data = Dataset::from_raw(X, std::vector<double>{1.0, 2.0});
  RngStream rng(1);
  const auto g = fit_gp(data, rng);
  EXPECT_GE(g.params().signal_variance, kSignalVarianceMin);
  EXPECT_LE(g.params().signal_variance, kSignalVarianceMax);
  EXPECT_GE(g.params().lengthscales.minCoeff(), kLengthscaleMin);
  EXPECT_LE(g.params().lengthscales.maxCoeff(), kLengthscaleMax);
}

TEST(GpFit, DeterministicAndImprovesOnDefaults) {
  auto f = random_fixture(12, 30, 3);
  RngStream a(5), b(5);
  const auto g1 = fit_gp(f.data, a);
  const auto g2 = fit_gp(f.data, b);
  EXPECT_EQ(g1.log_marginal_likelihood(), g2.log_marginal_likelihood());
  EXPECT_EQ(g1.params().lengthscales, g2.params().lengthscales);
  const auto base = GpPosterior::build(f.data, KernelParams::isotropic(KernelFamily::Matern52, 1.0, 1.0, 3));
  EXPECT_GE(g1.log_marginal_likelihood(), base.log_marginal_likelihood());
}

TEST(GpFit, BoxWidthInitOnUnitCubeMatchesDefault) {
  auto f = random_fixture(14, 25, 4);
  RngStream a(3), b(3);
  const auto g1 = fit_gp(f.data, a);
  const auto g2 = fit_gp(f.data, b, GpFitOptions::for_bounds(Bounds::cube(4, 0.0, 1.0)));
  EXPECT_EQ(g1.params().lengthscales, g2.params().lengthscales);
  EXPECT_EQ(g1.log_marginal_likelihood(), g2.log_marginal_likelihood());
}

TEST(GpFit, BoxWidthInitEscapesFlatRegionOnWideBox) {
  // 30 points in [-10, 10]^10 are ~25 apart, so unit lengthscales give K ~ I
  // and a likelihood that is flat in every lengthscale.
  const auto bm = make_levy(10);
  int better = 0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    RngStream l(s);
    const Dataset data = lhs_init(bm, 30, l);
    RngStream a(s + 100), b(s + 100);
    const auto plain = fit_gp(data, a);
    const auto scaled = fit_gp(data, b, GpFitOptions::for_bounds(bm.bounds));
    EXPECT_GE(scaled.log_marginal_likelihood(), plain.log_marginal_likelihood() - 1e-9);
    better += scaled.log_marginal_likelihood() > plain.log_marginal_likelihood() + 1.0;
    EXPECT_GT(scaled.params().lengthscales.minCoeff(), 1.0);
  }
  EXPECT_GE(better, 2);
}

TEST(GpFit, RejectsTooFewPoints) {
  Dataset d(std::vector<Point>{Point::Zero(1)}, std::vector<double>{0.0});
  RngStream rng(0);
  EXPECT_THROW(fit_gp(d, rng), InvalidInput);
}

TEST(Fantasy, ZeroVarianceReturnsMean) {
  Dataset d(std::vector<Point>{Point::Constant(1, 0.4)}, std::vector<double>{0.7});
  const auto g = GpPosterior::build(d, KernelParams::isotropic(KernelFamily::SquaredExponential, 1.0, 1.0, 1), 0.0);
  const Point x = Point::Constant(1, 0.4);
  ASSERT_EQ(g.predict(x).variance, 0.0);
  RngStream rng(3);
  EXPECT_EQ(fantasy_value(g, x, rng), g.predict(x).mean);
}

TEST(Fantasy, MomentsMatchPredictive) {
  auto f = random_fixture(13, 10, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e-2);
  const Point x = Point::Constant(2, 0.5);
  const auto m = g.predict(x);
  RngStream rng(4);
  const int n = 10000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = fantasy_value(g, x, rng);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  const double target = m.variance + 1e-2;
  EXPECT_NEAR(mean, m.mean, 4 * std::sqrt(target / n));
  EXPECT_NEAR(var, target, 0.1 * target);
}

TEST(Fantasy, SameSubstreamSameDraws) {
  auto f = random_fixture(14, 10, 2);
  const auto g = GpPosterior::build(f.data, f.params, 1e-6);
  RngStream root(77);
  RngStream a = root.substream("lie", 1), b = root.substream("lie", 1);
  const Point x = Point::Constant(2, 0.2);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(fantasy_value(g, x, a), fantasy_value(g, x, b));
}
