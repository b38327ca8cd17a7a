#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"

namespace bocl {

enum class KernelFamily { SquaredExponential, Matern52 };

inline constexpr double kSignalVarianceMin = 1e-3;
inline constexpr double kSignalVarianceMax = 1e3;
inline constexpr double kLengthscaleMin = 1e-2;
inline constexpr double kLengthscaleMax = 1e2;

/// Stationary ARD kernel hyperparameters.
struct KernelParams {
  KernelFamily family = KernelFamily::Matern52;
  double signal_variance = 1.0;
  Eigen::VectorXd lengthscales;

  KernelParams() = default;
  KernelParams(KernelFamily f, double sf2, Eigen::VectorXd ell) : family(f), signal_variance(sf2), lengthscales(std::move(ell)) {
    validate();
  }

  static KernelParams isotropic(KernelFamily f, double sf2, double ell, std::size_t d) {
    return KernelParams(f, sf2, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), ell));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lengthscales.size()); }

  void validate() const {
    if (lengthscales.size() == 0) throw InvalidInput("KernelParams: no lengthscales");
    if (!(signal_variance >= kSignalVarianceMin * (1 - 1e-12) && signal_variance <= kSignalVarianceMax * (1 + 1e-12)))
      throw InvalidInput("KernelParams: signal_variance outside [1e-3, 1e3]");
    for (Eigen::Index i = 0; i < lengthscales.size(); ++i)
      if (!(lengthscales[i] >= kLengthscaleMin * (1 - 1e-12) && lengthscales[i] <= kLengthscaleMax * (1 + 1e-12)))
        throw InvalidInput("KernelParams: lengthscale " + std::to_string(i) + " outside [1e-2, 1e2]");
  }
};

namespace detail {

inline double kernel_from_scaled_sq(KernelFamily family, double sf2, double r2) {
  switch (family) {
    case KernelFamily::SquaredExponential:
      return sf2 * std::exp(-0.5 * r2);
    case KernelFamily::Matern52: {
      const double s5r = std::sqrt(5.0 * r2);
      return sf2 * (1.0 + s5r + 5.0 * r2 / 3.0) * std::exp(-s5r);
    }
  }
  return 0.0;
}

inline double scaled_sq_dist(const Eigen::VectorXd& inv_ell, const Point& a, const Point& b) {
  return (a - b).cwiseProduct(inv_ell).squaredNorm();
}

}  // namespace detail

inline double kernel_eval(const KernelParams& p, const Point& x, const Point& x2) {
  require_same_dim(x, p.lengthscales, "kernel_eval");
  require_same_dim(x2, p.lengthscales, "kernel_eval");
  const Eigen::VectorXd inv_ell = p.lengthscales.cwiseInverse();
  return detail::kernel_from_scaled_sq(p.family, p.signal_variance, detail::scaled_sq_dist(inv_ell, x, x2));
}

/// K + noise_variance * I over the given points.
inline Eigen::MatrixXd kernel_matrix(const KernelParams& p, std::span<const Point> X, double noise_variance) {
  if (X.empty()) throw InvalidInput("kernel_matrix: no points");
  if (!(noise_variance >= 0.0)) throw InvalidInput("kernel_matrix: negative noise variance");
  const Eigen::VectorXd inv_ell = p.lengthscales.cwiseInverse();
  for (const auto& x : X) require_same_dim(x, p.lengthscales, "kernel_matrix");
  const auto n = static_cast<Eigen::Index>(X.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = p.signal_variance + noise_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = detail::kernel_from_scaled_sq(p.family, p.signal_variance, detail::scaled_sq_dist(inv_ell, X[i], X[j]));
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  return K;
}

inline Eigen::VectorXd kernel_vector(const KernelParams& p, std::span<const Point> X, const Point& x_star) {
  require_same_dim(x_star, p.lengthscales, "kernel_vector");
  const Eigen::VectorXd inv_ell = p.lengthscales.cwiseInverse();
  Eigen::VectorXd k(static_cast<Eigen::Index>(X.size()));
  for (std::size_t i = 0; i < X.size(); ++i) {
    require_same_dim(X[i], p.lengthscales, "kernel_vector");
    k[static_cast<Eigen::Index>(i)] =
        detail::kernel_from_scaled_sq(p.family, p.signal_variance, detail::scaled_sq_dist(inv_ell, X[i], x_star));
  }
  return k;
}

/// Lower Cholesky factor of a symmetric matrix, with the diagonal jitter
/// that was needed to obtain it (0 when the matrix factored as given).
struct JitteredCholesky {
  Eigen::MatrixXd L;
  double jitter = 0.0;
};

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

/// Tries the matrix as given, then adds 1e-10, 1e-9, ... 1e-4 to the diagonal.
inline JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& K) {
  std::vector<double> tried;
  double jitter = 0.0;
  const auto n = K.rows();
  while (true) {
    tried.push_back(jitter);
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (jitter == 0.0)
      llt.compute(K);
    else
      llt.compute(K + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if ((L.diagonal().array() > 0.0).all() && L.allFinite()) return {std::move(L), jitter};
    }
    jitter = jitter == 0.0 ? kJitterStart : jitter * 10.0;
    if (jitter > kJitterMax * (1 + 1e-9))
      throw NumericalFailure("cholesky_with_jitter: matrix not positive definite after jitter escalation", tried);
  }
}

}  // namespace bocl
