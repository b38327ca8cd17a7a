#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"
#include "bocl/gp.hpp"
#include "bocl/kernels.hpp"
#include "bocl/surrogate.hpp"

namespace bocl {

enum class AcqKind { EI, UCB, PI };

inline std::string to_string(AcqKind k) {
  switch (k) {
    case AcqKind::EI: return "ei";
    case AcqKind::UCB: return "ucb";
    case AcqKind::PI: return "pi";
  }
  return "?";
}

struct AcqSpec {
  AcqKind kind = AcqKind::EI;
  double xi = 0.01;   // improvement offset for EI / PI
  double beta = 2.0;  // UCB weight on sigma is sqrt(beta)

  void validate() const {
    if (!(xi >= 0.0)) throw InvalidInput("AcqSpec: xi must be >= 0");
    if (!(beta > 0.0)) throw InvalidInput("AcqSpec: beta must be > 0");
  }

  static AcqSpec ei(double xi = 0.01) { return {AcqKind::EI, xi, 2.0}; }
  static AcqSpec ucb(double beta = 2.0) { return {AcqKind::UCB, 0.01, beta}; }
  static AcqSpec pi(double xi = 0.01) { return {AcqKind::PI, xi, 2.0}; }
};

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// erfc keeps full relative accuracy in the lower tail.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double expected_improvement(double mean, double sd, double threshold) {
  const double imp = threshold - mean;
  if (!(sd > 0.0)) return imp > 0.0 ? imp : 0.0;
  const double z = imp / sd;
  const double ei = imp * normal_cdf(z) + sd * normal_pdf(z);
  return ei > 0.0 ? ei : 0.0;
}

/// Acquisition value for minimization. EI and PI use the threshold
/// f_best - xi; UCB is -mu + sqrt(beta) sigma.
inline double acq_value(const AcqSpec& spec, const PosteriorMoments& m, double f_best) {
  if (!(m.variance >= 0.0)) throw InvalidInput("acq_value: negative variance");
  const double sd = m.sd();
  switch (spec.kind) {
    case AcqKind::EI:
      return expected_improvement(m.mean, sd, f_best - spec.xi);
    case AcqKind::UCB:
      return -m.mean + std::sqrt(spec.beta) * sd;
    case AcqKind::PI: {
      const double imp = f_best - spec.xi - m.mean;
      if (!(sd > 0.0)) return imp > 0.0 ? 1.0 : 0.0;
      return normal_cdf(imp / sd);
    }
  }
  return 0.0;
}

/// Explicit repulsion around already-selected points.
struct LpPenalty {
  std::vector<Point> anchors;
  double lengthscale = 1.0;
};

inline double lp_penalty_factor(const LpPenalty& pen, const Point& x) {
  if (!(pen.lengthscale > 0.0)) throw InvalidInput("LpPenalty: lengthscale must be positive");
  double f = 1.0;
  const double two_l2 = 2.0 * pen.lengthscale * pen.lengthscale;
  for (const auto& a : pen.anchors) {
    require_same_dim(a, x, "lp_penalty_factor");
    f *= -std::expm1(-(x - a).squaredNorm() / two_l2);
  }
  return f;
}

/// base * prod_j (1 - exp(-|x - x_j|^2 / (2 l^2))). base must be >= 0.
inline double lp_acq_value(double base, const LpPenalty& pen, const Point& x) {
  if (!(base >= 0.0)) throw InvalidInput("lp_acq_value: base acquisition must be nonnegative");
  return base * lp_penalty_factor(pen, x);
}

/// Isotropic reduction of ARD lengthscales used for the LP penalty.
inline double geometric_mean_lengthscale(const KernelParams& p) {
  return std::exp(p.lengthscales.array().log().mean());
}

struct ImplicitPenalty {
  double psi = 1.0;          // EI_after / EI_before
  double sigma_ratio = 1.0;  // sigma_after / sigma_before
};

/// Ratio of EI after and before conditioning (threshold f_best, no offset).
inline ImplicitPenalty implicit_penalizer(const GpPosterior& before, const GpPosterior& after, const Point& x, double f_best) {
  const auto mb = before.predict(x);
  const auto ma = after.predict(x);
  const double eb = expected_improvement(mb.mean, mb.sd(), f_best);
  if (!(eb > 1e-300)) throw UndefinedResult("implicit_penalizer: EI before conditioning is zero");
  const double ea = expected_improvement(ma.mean, ma.sd(), f_best);
  return {ea / eb, mb.sd() > 0.0 ? ma.sd() / mb.sd() : 0.0};
}

/// sqrt(1 - k(x,x_*)^2 / (sigma^2(x) (sigma^2(x_*) + noise))) with the prior
/// kernel in the numerator; the closed-form approximation of the implicit
/// penalty in the prior-dominated regime.
inline double implicit_penalizer_approx(const GpPosterior& before, const Point& x_star, const Point& x) {
  const double k = kernel_eval(before.params(), x, x_star);
  const double vx = before.predict(x).variance;
  const double vs = before.predict(x_star).variance;
  const double r = 1.0 - k * k / (vx * (vs + before.noise_variance()));
  return std::sqrt(r > 0.0 ? r : 0.0);
}

/// First-order change in EI (threshold f_best) from conditioning on
/// (x_star, y_tilde): -dmu Phi(Z) - dvar / (2 sigma) phi(Z).
inline double delta_ei_first_order(const GpPosterior& g, const Point& x, const Point& x_star, double y_tilde, double f_best) {
  const auto m = g.predict(x);
  const double sd = m.sd();
  if (!(sd > 0.0)) throw UndefinedResult("delta_ei_first_order: zero predictive sd at x");
  const auto ms = g.predict(x_star);
  const double denom = ms.variance + g.noise_variance();
  const double kxs = g.posterior_cov(x, x_star);
  const double dmu = kxs / denom * (y_tilde - ms.mean);
  const double dvar = kxs * kxs / denom;
  const double z = (f_best - m.mean) / sd;
  return -dmu * normal_cdf(z) - dvar / (2.0 * sd) * normal_pdf(z);
}

}  // namespace bocl
