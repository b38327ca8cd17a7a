#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bocl/acquisition.hpp"
#include "bocl/diagnostics.hpp"

using namespace bocl;

namespace {

// E[max(t - Y, 0)], Y ~ N(mu, sd^2), by composite Simpson of (t - y) p(y)
// over [mu - 12 sd, t].
double ei_by_quadrature(double mu, double sd, double t) {
  const int n = 20000;
  const double a = mu - 12 * sd, b = t, h = (b - a) / n;
  if (b <= a) return 0.0;
  double s = 0;
  for (int i = 0; i <= n; ++i) {
    const double y = a + i * h;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    const double dens = std::exp(-0.5 * (y - mu) * (y - mu) / (sd * sd)) / (sd * std::sqrt(2 * std::numbers::pi));
    s += w * std::max(t - y, 0.0) * dens;
  }
  return s * h / 3;
}

}  // namespace

TEST(NormalCdf, KnownValues) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(normal_cdf(-3.0), 0.0013498980316301, 1e-15);
  EXPECT_NEAR(normal_cdf(-8.0) / 6.22096057427178e-16, 1.0, 1e-12);
  EXPECT_NEAR(normal_pdf(0.0), 0.3989422804014327, 1e-16);
}

TEST(Ei, AtIncumbentUnitSd) {
  const double v = acq_value(AcqSpec::ei(0.0), {0.0, 1.0}, 0.0);
  EXPECT_NEAR(v, 1.0 / std::sqrt(2 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(v, 0.398942, 1e-6);
  EXPECT_NEAR(v, ei_by_quadrature(0.0, 1.0, 0.0), 1e-9);
}

TEST(Ei, MatchesQuadrature) {
  for (double mu : {-1.5, -0.2, 0.0, 0.7, 2.0})
    for (double sd : {0.05, 0.3, 1.0, 2.5}) {
      const double f = 0.1;
      const double v = acq_value(AcqSpec::ei(0.01), {mu, sd * sd}, f);
      EXPECT_NEAR(v, ei_by_quadrature(mu, sd, f - 0.01), 1e-9) << mu << " " << sd;
    }
}

TEST(Ei, ZeroSdLimits) {
  EXPECT_EQ(acq_value(AcqSpec::ei(0.0), {1.0, 0.0}, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(acq_value(AcqSpec::ei(0.01), {0.0, 0.0}, 0.5), 0.49);
}

TEST(Ei, NonNegativeAndVanishesForVeryNegativeZ) {
  for (double mu = -3; mu <= 40; mu += 0.5) EXPECT_GE(acq_value(AcqSpec::ei(), {mu, 1.0}, 0.0), 0.0);
  EXPECT_LT(acq_value(AcqSpec::ei(), {40.0, 1.0}, 0.0), 1e-300);
}

TEST(Ucb, DirectFormula) {
  EXPECT_NEAR(acq_value(AcqSpec::ucb(2.0), {0.0, 1.0}, 0.0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(acq_value(AcqSpec::ucb(2.0), {0.0, 1.0}, 0.0), 1.414214, 1e-6);
  EXPECT_NEAR(acq_value(AcqSpec::ucb(4.0), {1.5, 0.25}, 0.0), -1.5 + 2 * 0.5, 1e-15);
}

TEST(Pi, DirectFormula) {
  EXPECT_NEAR(acq_value(AcqSpec::pi(0.0), {0.0, 1.0}, 1.0), normal_cdf(1.0), 1e-15);
  EXPECT_EQ(acq_value(AcqSpec::pi(0.0), {0.0, 0.0}, 1.0), 1.0);
  EXPECT_EQ(acq_value(AcqSpec::pi(0.0), {2.0, 0.0}, 1.0), 0.0);
}

TEST(Acquisition, NonDecreasingInSigma) {
  for (auto spec : {AcqSpec::ei(), AcqSpec::ucb(), AcqSpec::pi()})
    for (double mu : {-1.0, 0.0, 0.3, 2.0}) {
      double prev = -INFINITY;
      for (double sd = 0.0; sd <= 3.0; sd += 0.01) {
        const double v = acq_value(spec, {mu, sd * sd}, 0.2);
        if (!(spec.kind == AcqKind::PI && mu < 0.2 - spec.xi)) {
          EXPECT_GE(v, prev - 1e-15) << to_string(spec.kind);
        }
        prev = v;
      }
    }
}

TEST(Acquisition, RejectsNegativeVarianceAndBadSpec) {
  EXPECT_THROW(acq_value(AcqSpec::ei(), {0.0, -1.0}, 0.0), InvalidInput);
  EXPECT_THROW(AcqSpec::ei(-0.1).validate(), InvalidInput);
  EXPECT_THROW(AcqSpec::ucb(0.0).validate(), InvalidInput);
}

TEST(LocalPenalty, Examples) {
  const double ell = 0.7;
  LpPenalty pen{{Point::Zero(2)}, ell};
  EXPECT_EQ(lp_penalty_factor(pen, Point::Zero(2)), 0.0);
  Point far(2);
  far << 10 * ell, 0;
  const double f = lp_penalty_factor(pen, far);
  EXPECT_LT(1.0 - f, 1e-21);
  EXPECT_LE(f, 1.0);
  Point half(2);
  half << 0, ell * std::sqrt(2 * std::log(2.0));
  EXPECT_NEAR(lp_penalty_factor(pen, half), 0.5, 1e-15);
}

TEST(LocalPenalty, EmptyAnchorsAndProduct) {
  LpPenalty none{{}, 1.0};
  EXPECT_EQ(lp_acq_value(0.3, none, Point::Zero(1)), 0.3);
  LpPenalty two{{Point::Constant(1, 0.0), Point::Constant(1, 1.0)}, 1.0};
  const Point x = Point::Constant(1, 0.4);
  const double expected = 0.3 * (1 - std::exp(-0.16 / 2)) * (1 - std::exp(-0.36 / 2));
  EXPECT_NEAR(lp_acq_value(0.3, two, x), expected, 1e-15);
  EXPECT_THROW(lp_acq_value(-0.1, two, x), InvalidInput);
}

TEST(LocalPenalty, MonotoneAlongRay) {
  LpPenalty pen{{Point::Zero(3)}, 0.5};
  Point dir(3);
  dir << 1, 2, -1;
  dir.normalize();
  double prev = -1;
  for (int i = 0; i <= 100; ++i) {
    const double f = lp_penalty_factor(pen, Point(0.05 * i * dir));
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    EXPECT_GE(f, prev);
    prev = f;
  }
}

TEST(LocalPenalty, GeometricMeanLengthscale) {
  Eigen::VectorXd ell(3);
  ell << 0.5, 2.0, 1.0;
  EXPECT_NEAR(geometric_mean_lengthscale(KernelParams(KernelFamily::Matern52, 1.0, ell)), 1.0, 1e-15);
}

TEST(ImplicitPenalizer, FarFieldAndAtPoint) {
  auto rig = prior_dominated_rig(1.0, 1.0, 1e-6, 2);
  const auto& g = rig.gp;
  const auto after = g.condition(rig.x_star, g.predict(rig.x_star).mean);
  const double f_best = g.predict(rig.x_star).mean;
  Point far = rig.x_star;
  far[1] = 10.0;
  const auto pf = implicit_penalizer(g, after, far, f_best);
  EXPECT_GE(pf.psi, 0.99);
  EXPECT_LE(pf.psi, 1.0 + 1e-12);
  EXPECT_LE(implicit_penalizer(g, after, rig.x_star, f_best).psi, 0.05);
}

TEST(ImplicitPenalizer, TracksSigmaRatioInExplorationRegime) {
  auto rig = prior_dominated_rig(1.0, 1.0, 1e-6, 2);
  const auto& g = rig.gp;
  const auto after = g.condition(rig.x_star, g.predict(rig.x_star).mean);
  RngStream rng(3);
  for (int i = 0; i < 20; ++i) {
    Point x = rig.x_star;
    x[0] = -rng.uniform(0.0, 1.0);
    x[1] = rng.uniform(0.2, 2.5);
    const auto ip = implicit_penalizer(g, after, x, g.predict(x).mean);
    EXPECT_LE(std::abs(ip.psi - ip.sigma_ratio), 0.1 * ip.sigma_ratio);
    const double approx = implicit_penalizer_approx(g, rig.x_star, x);
    EXPECT_LE(std::abs(ip.psi - approx), 0.1 * approx);
  }
}

TEST(ImplicitPenalizer, UndefinedWhenEiVanishes) {
  auto rig = prior_dominated_rig(1.0, 1.0, 1e-6, 1);
  const auto after = rig.gp.condition(rig.x_star, 0.0);
  EXPECT_THROW(implicit_penalizer(rig.gp, after, rig.x_star, -50.0), UndefinedResult);
}

TEST(DeltaEi, KbNegativeNearPointAndVanishesFar) {
  auto rig = prior_dominated_rig(1.0, 1.0, 1e-6, 2);
  const auto& g = rig.gp;
  const double mu = g.predict(rig.x_star).mean;
  for (double r = 0.1; r <= 1.0; r += 0.1) {
    Point x = rig.x_star;
    x[1] = r;
    EXPECT_LT(delta_ei_first_order(g, x, rig.x_star, mu, mu), 0.0);
  }
  Point far = rig.x_star;
  far[1] = 10.0;
  EXPECT_LE(std::abs(delta_ei_first_order(g, far, rig.x_star, mu - 0.5, mu)), 1e-12);
}

TEST(DeltaEi, MatchesExactChangeForSmallPerturbations) {
  auto rig = prior_dominated_rig(1.0, 1.0, 1e-6, 2);
  const auto& g = rig.gp;
  const auto ms = g.predict(rig.x_star);
  RngStream rng(4);
  for (int i = 0; i < 20; ++i) {
    const double f_best = ms.mean + rng.uniform(-1.0, 1.0) * ms.sd();
    const double y = ms.mean - rng.uniform(0.1, 0.5) * ms.sd();
    const double ang = rng.uniform(0.0, 2 * std::numbers::pi), rad = rng.uniform(2.0, 3.0);
    Point x(2);
    x << std::cos(ang) * rad, std::sin(ang) * rad;
    const auto after = g.condition(rig.x_star, y);
    const auto mb = g.predict(x), ma = after.predict(x);
    const double exact = expected_improvement(ma.mean, ma.sd(), f_best) - expected_improvement(mb.mean, mb.sd(), f_best);
    const double first = delta_ei_first_order(g, x, rig.x_star, y, f_best);
    EXPECT_EQ(exact > 0, first > 0);
    EXPECT_LE(std::abs(first - exact), 0.5 * std::abs(exact));
  }
}
