#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "bocl/box_minimizer.hpp"
#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"
#include "bocl/kernels.hpp"
#include "bocl/rng.hpp"
#include "bocl/surrogate.hpp"

namespace bocl {

inline constexpr double kDefaultNoiseVariance = 1e-6;

/// Exact GP posterior with constant zero mean in normalized target space.
///
/// Holds L with L L^T = K + (noise + jitter) I and alpha = K_y^{-1} y.
/// Hyperparameters never change after construction; condition() appends
/// one row to L in O(n^2) and returns a new value.
class GpPosterior {
 public:
  /// Factor the kernel matrix for fixed hyperparameters.
  static GpPosterior build(Dataset data, KernelParams params, double noise_variance = kDefaultNoiseVariance) {
    if (params.dim() != data.dim()) throw InvalidInput("GpPosterior: kernel dimension does not match data");
    if (!(noise_variance >= 0.0)) throw InvalidInput("GpPosterior: negative noise variance");
    GpPosterior g;
    g.params_ = std::move(params);
    g.inv_ell_ = g.params_.lengthscales.cwiseInverse();
    g.noise_ = noise_variance;
    g.data_ = std::move(data);
    auto chol = cholesky_with_jitter(kernel_matrix(g.params_, g.data_.points(), g.noise_));
    g.chol_ = std::move(chol.L);
    g.jitter_ = chol.jitter;
    g.refresh_alpha();
    return g;
  }

  const KernelParams& params() const noexcept { return params_; }
  double noise_variance() const noexcept { return noise_; }
  double jitter() const noexcept { return jitter_; }
  const Dataset& data() const noexcept { return data_; }
  const Eigen::MatrixXd& chol() const noexcept { return chol_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim() const noexcept { return data_.dim(); }

  double prior_variance() const noexcept { return params_.signal_variance; }

  Eigen::VectorXd cross_covariance(const Point& x) const {
    require_same_dim(x, inv_ell_, "GpPosterior");
    const auto& pts = data_.points();
    Eigen::VectorXd k(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i)
      k[static_cast<Eigen::Index>(i)] =
          detail::kernel_from_scaled_sq(params_.family, params_.signal_variance, detail::scaled_sq_dist(inv_ell_, pts[i], x));
    return k;
  }

  /// k(x,x) - |L^{-1} k_x|^2 before clamping at zero.
  double raw_variance(const Point& x) const {
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(cross_covariance(x));
    return params_.signal_variance - v.squaredNorm();
  }

  PosteriorMoments predict(const Point& x) const {
    const Eigen::VectorXd k = cross_covariance(x);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    const double var = params_.signal_variance - v.squaredNorm();
    return {k.dot(alpha_), var > 0.0 ? var : 0.0};
  }

  double posterior_cov(const Point& x, const Point& x2) const {
    require_same_dim(x2, inv_ell_, "posterior_cov");
    const Eigen::VectorXd v1 = chol_.triangularView<Eigen::Lower>().solve(cross_covariance(x));
    const Eigen::VectorXd v2 = chol_.triangularView<Eigen::Lower>().solve(cross_covariance(x2));
    const double prior = detail::kernel_from_scaled_sq(params_.family, params_.signal_variance,
                                                       detail::scaled_sq_dist(inv_ell_, x, x2));
    return prior - v1.dot(v2);
  }

  /// Posterior after adding (x_star, y_tilde), y_tilde in normalized units.
  /// Hyperparameters and the normalization map are unchanged.
  GpPosterior condition(const Point& x_star, double y_tilde) const {
    require_same_dim(x_star, inv_ell_, "condition");
    require_finite(x_star, "condition");
    if (!std::isfinite(y_tilde)) throw InvalidInput("condition: non-finite pseudo-observation");
    const Eigen::VectorXd k = cross_covariance(x_star);
    const Eigen::VectorXd l12 = chol_.triangularView<Eigen::Lower>().solve(k);
    const double base = params_.signal_variance + noise_ + jitter_ - l12.squaredNorm();

    std::vector<double> tried{0.0};
    double extra = 0.0;
    while (!(base + extra > 0.0) || !std::isfinite(std::sqrt(base + extra))) {
      extra = extra == 0.0 ? kJitterStart : extra * 10.0;
      tried.push_back(extra);
      if (extra > kJitterMax * (1 + 1e-9))
        throw NumericalFailure("condition: Cholesky extension failed after jitter escalation", tried);
    }

    GpPosterior g = *this;
    const auto n = static_cast<Eigen::Index>(size());
    g.chol_.conservativeResize(n + 1, n + 1);
    g.chol_.col(n).setZero();
    g.chol_.row(n).head(n) = l12.transpose();
    g.chol_(n, n) = std::sqrt(base + extra);
    g.data_.append(x_star, y_tilde);
    g.refresh_alpha();
    return g;
  }

  GpPosterior condition(const Point& x_star, double y_tilde, RngStream&) const { return condition(x_star, y_tilde); }

  double log_marginal_likelihood() const {
    const Eigen::Map<const Eigen::VectorXd> y(data_.targets().data(), static_cast<Eigen::Index>(size()));
    return -0.5 * y.dot(alpha_) - chol_.diagonal().array().log().sum() -
           0.5 * static_cast<double>(size()) * std::log(2.0 * std::numbers::pi);
  }

 private:
  void refresh_alpha() {
    const Eigen::Map<const Eigen::VectorXd> y(data_.targets().data(), static_cast<Eigen::Index>(size()));
    alpha_ = chol_.triangularView<Eigen::Lower>().solve(y);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
  }

  KernelParams params_;
  Eigen::VectorXd inv_ell_;
  double noise_ = kDefaultNoiseVariance;
  double jitter_ = 0.0;
  Dataset data_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
};

static_assert(ConditioningSurrogate<GpPosterior>);

struct GpFitOptions {
  KernelFamily family = KernelFamily::Matern52;
  double noise_variance = kDefaultNoiseVariance;
  int restarts = 5;
  double fd_step = 1e-5;  // in log-hyperparameter space
  int max_iterations = 200;
  // Lengthscales for the first restart; empty means 1 per dimension.
  Eigen::VectorXd lengthscale_init;

  /// First restart at lengthscale = box width per dimension (1 on the unit cube).
  static GpFitOptions for_bounds(const Bounds& b) {
    GpFitOptions o;
    o.lengthscale_init = b.width().cwiseMax(kLengthscaleMin).cwiseMin(kLengthscaleMax);
    return o;
  }
};

namespace detail {

inline KernelParams params_from_log(KernelFamily family, const Eigen::VectorXd& theta) {
  KernelParams p;
  p.family = family;
  p.signal_variance = std::clamp(std::exp(theta[0]), kSignalVarianceMin, kSignalVarianceMax);
  p.lengthscales = theta.tail(theta.size() - 1).array().exp().cwiseMax(kLengthscaleMin).cwiseMin(kLengthscaleMax);
  return p;
}

inline double log_marginal_likelihood_at(const Dataset& data, const KernelParams& p, double noise) {
  try {
    const auto chol = cholesky_with_jitter(kernel_matrix(p, data.points(), noise));
    const Eigen::Map<const Eigen::VectorXd> y(data.targets().data(), static_cast<Eigen::Index>(data.size()));
    const Eigen::VectorXd a = chol.L.triangularView<Eigen::Lower>().solve(y);
    return -0.5 * a.squaredNorm() - chol.L.diagonal().array().log().sum() -
           0.5 * static_cast<double>(data.size()) * std::log(2.0 * std::numbers::pi);
  } catch (const NumericalFailure&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

/// Maximize the log marginal likelihood over (signal variance, ARD
/// lengthscales) in log space with `restarts` local searches; the first
/// starts at signal variance 1 and opt.lengthscale_init (unit lengthscales by
/// default), the rest are drawn
/// log-uniformly within the bounds. Noise variance stays fixed.
inline GpPosterior fit_gp(const Dataset& data, RngStream& rng, const GpFitOptions& opt = {}) {
  if (data.size() < 2) throw InvalidInput("fit_gp: need at least two observations");
  if (opt.restarts < 1) throw InvalidInput("fit_gp: restarts must be >= 1");
  const auto d = static_cast<Eigen::Index>(data.dim());
  if (opt.lengthscale_init.size() != 0 && opt.lengthscale_init.size() != d)
    throw InvalidInput("fit_gp: lengthscale_init has the wrong dimension");
  Eigen::VectorXd lo(d + 1), hi(d + 1);
  lo[0] = std::log(kSignalVarianceMin);
  hi[0] = std::log(kSignalVarianceMax);
  lo.tail(d).setConstant(std::log(kLengthscaleMin));
  hi.tail(d).setConstant(std::log(kLengthscaleMax));

  auto neg_lml = [&](const Eigen::VectorXd& theta) {
    return -detail::log_marginal_likelihood_at(data, detail::params_from_log(opt.family, theta), opt.noise_variance);
  };

  BoxMinimizeOptions bo;
  bo.max_iterations = opt.max_iterations;
  bo.pg_tolerance = 1e-5;
  bo.relative_f_tolerance = 2.2e-9;
  bo.fd_step = Eigen::VectorXd::Constant(d + 1, opt.fd_step);

  RngStream init = rng.substream("gp-fit-init");
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  for (int r = 0; r < opt.restarts; ++r) {
    Eigen::VectorXd theta0(d + 1);
    if (r == 0) {
      theta0.setZero();
      if (opt.lengthscale_init.size() != 0) theta0.tail(d) = opt.lengthscale_init.array().log().matrix();
    } else {
      for (Eigen::Index i = 0; i < d + 1; ++i) theta0[i] = init.uniform(lo[i], hi[i]);
    }
    const auto res = minimize_box(neg_lml, theta0, lo, hi, bo);
    if (std::isfinite(res.f) && res.f < best_f) {
      best_f = res.f;
      best_theta = res.x;
    }
  }
  if (!std::isfinite(best_f)) throw NumericalFailure("fit_gp: every restart failed");
  return GpPosterior::build(data, detail::params_from_log(opt.family, best_theta), opt.noise_variance);
}

/// Draw y ~ N(mu(x), sigma^2(x) + noise).
inline double fantasy_value(const GpPosterior& g, const Point& x_star, RngStream& rng) {
  const auto m = g.predict(x_star);
  const double sd = std::sqrt(m.variance + g.noise_variance());
  const double z = rng.normal();
  if (sd == 0.0) return m.mean;
  return m.mean + sd * z;
}

}  // namespace bocl
