#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bocl/kernels.hpp"
#include "bocl/rng.hpp"

using namespace bocl;

namespace {

std::vector<Point> random_points(std::size_t n, std::size_t d, RngStream& rng) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) {
    Point x(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) x[static_cast<Eigen::Index>(k)] = rng.uniform();
    out.push_back(x);
  }
  return out;
}

double matern52_by_hand(double sf2, double r) {
  const double a = std::sqrt(5.0) * r;
  return sf2 * (1 + a + a * a / 3) * std::exp(-a);
}

}  // namespace

TEST(KernelEval, SquaredExponentialZeroDistance) {
  const auto p = KernelParams::isotropic(KernelFamily::SquaredExponential, 1.0, 1.0, 2);
  const Point x = Point::Constant(2, 0.3);
  EXPECT_DOUBLE_EQ(kernel_eval(p, x, x), 1.0);
}

TEST(KernelEval, SquaredExponentialSquaredDistanceTwo) {
  const auto p = KernelParams::isotropic(KernelFamily::SquaredExponential, 1.0, 1.0, 2);
  Point a(2), b(2);
  a << 0, 0;
  b << 1, 1;
  EXPECT_NEAR(kernel_eval(p, a, b), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(kernel_eval(p, a, b), 0.367879, 1e-6);
}

TEST(KernelEval, Matern52MatchesClosedForm) {
  Eigen::VectorXd ell(3);
  ell << 0.5, 1.0, 2.0;
  const KernelParams p(KernelFamily::Matern52, 1.7, ell);
  Point a(3), b(3);
  a << 0.1, -0.4, 1.0;
  b << 0.6, 0.2, -0.5;
  const double r = std::sqrt(std::pow((0.1 - 0.6) / 0.5, 2) + std::pow(-0.6 / 1.0, 2) + std::pow(1.5 / 2.0, 2));
  EXPECT_NEAR(kernel_eval(p, a, b), matern52_by_hand(1.7, r), 1e-14);
}

TEST(KernelEval, Matern52DecaysMonotonically) {
  const auto p = KernelParams::isotropic(KernelFamily::Matern52, 1.0, 1.0, 1);
  Point o = Point::Zero(1);
  double prev = kernel_eval(p, o, o);
  for (int i = 1; i <= 200; ++i) {
    Point x = Point::Constant(1, 0.1 * i);
    const double k = kernel_eval(p, o, x);
    EXPECT_LT(k, prev);
    prev = k;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(KernelEval, DimensionMismatchThrows) {
  const auto p = KernelParams::isotropic(KernelFamily::Matern52, 1.0, 1.0, 2);
  EXPECT_THROW(kernel_eval(p, Point::Zero(2), Point::Zero(3)), InvalidInput);
}

TEST(KernelParams, BoundsEnforced) {
  EXPECT_THROW(KernelParams::isotropic(KernelFamily::Matern52, 1e-4, 1.0, 1), InvalidInput);
  EXPECT_THROW(KernelParams::isotropic(KernelFamily::Matern52, 1.0, 1e3, 1), InvalidInput);
  EXPECT_NO_THROW(KernelParams::isotropic(KernelFamily::Matern52, 1e3, 1e-2, 1));
}

TEST(KernelMatrix, SinglePoint) {
  const auto p = KernelParams::isotropic(KernelFamily::Matern52, 1.0, 0.5, 2);
  std::vector<Point> X{Point::Constant(2, 0.2)};
  const auto K = kernel_matrix(p, X, 1e-6);
  ASSERT_EQ(K.rows(), 1);
  EXPECT_DOUBLE_EQ(K(0, 0), 1.000001);
}

TEST(KernelMatrix, IdenticalPointsStayPositiveDefinite) {
  const auto p = KernelParams::isotropic(KernelFamily::SquaredExponential, 1.0, 0.5, 2);
  std::vector<Point> X{Point::Constant(2, 0.2), Point::Constant(2, 0.2)};
  const double sn2 = 1e-6;
  const auto K = kernel_matrix(p, X, sn2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  EXPECT_GE(es.eigenvalues().minCoeff(), sn2 * (1 - 1e-6));
  const auto ch = cholesky_with_jitter(K);
  EXPECT_EQ(ch.jitter, 0.0);
}

TEST(KernelMatrix, CholeskyReconstructs) {
  RngStream rng(1);
  const auto X = random_points(10, 3, rng);
  const auto p = KernelParams::isotropic(KernelFamily::Matern52, 1.3, 0.4, 3);
  const auto K = kernel_matrix(p, X, 1e-6);
  const auto ch = cholesky_with_jitter(K);
  EXPECT_LE((ch.L * ch.L.transpose() - K).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE((ch.L.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().array() == 0.0).all());
}

TEST(KernelMatrix, SymmetricWithNoiseOnDiagonal) {
  RngStream rng(2);
  const auto X = random_points(6, 2, rng);
  const auto p = KernelParams::isotropic(KernelFamily::SquaredExponential, 2.0, 0.3, 2);
  const auto K = kernel_matrix(p, X, 0.25);
  for (int i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(K(i, i), 2.25);
    for (int j = 0; j < 6; ++j) {
      EXPECT_EQ(K(i, j), K(j, i));
      if (i != j) {
        EXPECT_DOUBLE_EQ(K(i, j), kernel_eval(p, X[i], X[j]));
      }
    }
  }
}

TEST(Cholesky, JitterEscalationRescuesSemidefinite) {
  // Rank-one matrix: needs jitter but becomes PD with a small one.
  Eigen::VectorXd v(3);
  v << 1, 2, 3;
  const Eigen::MatrixXd K = v * v.transpose();
  const auto ch = cholesky_with_jitter(K);
  EXPECT_GT(ch.jitter, 0.0);
  EXPECT_LE(ch.jitter, kJitterMax);
}

TEST(Cholesky, IndefiniteFailsWithAttemptedLevels) {
  Eigen::MatrixXd K(2, 2);
  K << 1, 0, 0, -1;
  try {
    cholesky_with_jitter(K);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    const auto& tried = e.attempted_jitter();
    ASSERT_GE(tried.size(), 2u);
    EXPECT_EQ(tried.front(), 0.0);
    EXPECT_NEAR(tried.back(), kJitterMax, 1e-12);
  }
}

TEST(KernelVector, Examples) {
  RngStream rng(4);
  const auto X = random_points(5, 2, rng);
  const auto p = KernelParams::isotropic(KernelFamily::SquaredExponential, 1.5, 0.1, 2);
  const auto k0 = kernel_vector(p, X, X[0]);
  EXPECT_DOUBLE_EQ(k0[0], 1.5);
  const auto kfar = kernel_vector(p, X, Point::Constant(2, 50.0));
  EXPECT_LT(kfar.cwiseAbs().maxCoeff(), 1e-300);
  Point xs(2);
  xs << 0.37, 0.81;
  const auto k = kernel_vector(p, X, xs);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(k[i], kernel_eval(p, X[i], xs));
}
