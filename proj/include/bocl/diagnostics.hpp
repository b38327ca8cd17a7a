#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "bocl/acq_optim.hpp"
#include "bocl/acquisition.hpp"
#include "bocl/batch.hpp"
#include "bocl/bench.hpp"
#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"
#include "bocl/gp.hpp"
#include "bocl/mq_rbf.hpp"
#include "bocl/parametric.hpp"
#include "bocl/rng.hpp"

namespace bocl {

inline constexpr double kDiversityThreshold = 1e-6;

enum class SurrogateKind { Gp, MqRbf, Nn, NnRetrain, Rf, RfRebuild };

inline std::string to_string(SurrogateKind k) {
  switch (k) {
    case SurrogateKind::Gp: return "gp";
    case SurrogateKind::MqRbf: return "mq-rbf";
    case SurrogateKind::Nn: return "nn";
    case SurrogateKind::NnRetrain: return "nn-retrain";
    case SurrogateKind::Rf: return "rf";
    case SurrogateKind::RfRebuild: return "rf-rebuild";
  }
  return "?";
}

inline SurrogateKind surrogate_by_name(std::string_view s) {
  for (auto k : {SurrogateKind::Gp, SurrogateKind::MqRbf, SurrogateKind::Nn, SurrogateKind::NnRetrain,
                 SurrogateKind::Rf, SurrogateKind::RfRebuild})
    if (to_string(k) == s) return k;
  throw InvalidInput("unknown surrogate '" + std::string(s) + "'");
}

/// Fit the requested surrogate on data and hand it to fn.
template <typename Fn>
decltype(auto) with_surrogate(SurrogateKind kind, const Dataset& data, RngStream& rng, Fn&& fn,
                              const GpFitOptions& gp_opt = {}) {
  switch (kind) {
    case SurrogateKind::Gp: return fn(fit_gp(data, rng, gp_opt));
    case SurrogateKind::MqRbf: return fn(RbfModel::fit(data));
    case SurrogateKind::Nn: return fn(NnEnsemble::fit(data, rng, {}, false));
    case SurrogateKind::NnRetrain: return fn(NnEnsemble::fit(data, rng, {}, true));
    case SurrogateKind::Rf: return fn(ForestModel::fit(data, rng, {}, false));
    case SurrogateKind::RfRebuild: return fn(ForestModel::fit(data, rng, {}, true));
  }
  throw InvalidInput("with_surrogate: unknown kind");
}

struct SddReport {
  std::string surrogate_name;
  std::string benchmark;
  std::string acquisition;
  int q = 0;
  std::uint64_t seed = 0;
  double min_dist = 0.0;
  double mean_dist = 0.0;
  bool diverse = false;
  // Distance from member k (k = 2..q) to its nearest predecessor.
  std::vector<double> per_member_min_dist;
  std::vector<Point> points;
  std::string units = "raw";
};

inline SddReport summarize_batch(const std::vector<Point>& pts) {
  SddReport r;
  r.q = static_cast<int>(pts.size());
  if (pts.size() >= 2) {
    const auto s = distance_summary(pts);
    r.min_dist = s.min;
    r.mean_dist = s.mean;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) m = std::min(m, (pts[k] - pts[j]).norm());
      r.per_member_min_dist.push_back(m);
    }
  }
  r.diverse = r.min_dist > kDiversityThreshold;
  r.points = pts;
  return r;
}

struct SddOptions {
  AcqSpec acq = AcqSpec::ei();
  LieStrategy lie = {LieKind::CLMin};
};

/// Structural Diversity Diagnostic: LHS design, fit, one batch from the three
/// fixed diagonal starts. Diversity can only come from the model's response
/// to conditioning.
inline SddReport run_sdd(SurrogateKind kind, const Benchmark& bm, std::size_t n_init, int q, std::uint64_t seed,
                         const SddOptions& opt = {}) {
  if (n_init < bm.dim + 2) throw InvalidInput("run_sdd: n_init must be at least d + 2");
  if (q < 1) throw InvalidInput("run_sdd: q must be >= 1");
  RngStream root(seed);
  RngStream lhs_rng = root.substream("lhs");
  const Dataset data = lhs_init(bm, n_init, lhs_rng);
  RngStream fit_rng = root.substream("fit");
  RngStream batch_rng = root.substream("batch");
  const auto starts = fixed_starts(bm.bounds);
  const BatchResult br = with_surrogate(kind, data, fit_rng, [&](const auto& model) {
    return select_batch(model, data, q, opt.lie, opt.acq, bm.bounds, starts, batch_rng);
  }, GpFitOptions::for_bounds(bm.bounds));
  SddReport r = summarize_batch(br.points);
  r.surrogate_name = to_string(kind);
  r.benchmark = bm.name;
  r.acquisition = to_string(opt.acq.kind);
  r.seed = seed;
  return r;
}

struct AgnosticismResult {
  SddReport ei;
  SddReport ucb;
  bool pass = false;  // verdicts agree
};

inline AgnosticismResult acq_agnosticism_check(SurrogateKind kind, const Benchmark& bm, std::size_t n_init, int q,
                                               std::uint64_t seed) {
  AgnosticismResult r;
  r.ei = run_sdd(kind, bm, n_init, q, seed, {AcqSpec::ei(), {LieKind::CLMin}});
  r.ucb = run_sdd(kind, bm, n_init, q, seed, {AcqSpec::ucb(), {LieKind::CLMin}});
  r.pass = r.ei.diverse == r.ucb.diverse;
  return r;
}

struct RadiusCheck {
  double tau = 0.5;
  double ell = 1.0;
  double predicted_radius = 0.0;  // lower bound from the variance-update formula
  double measured_radius = 0.0;   // bisection on the conditioned GP
  double prior_variance_at_star = 0.0;
  bool pass = false;
};

struct PriorDominatedRig {
  GpPosterior gp;
  Point x_star;
  Point direction;  // unit ray pointing away from the dummy observation
};

/// SE-kernel GP with one observation (target 0) at distance 20 ell from the
/// origin; x_star is the origin.
inline PriorDominatedRig prior_dominated_rig(double ell, double sigma_f2, double sigma_n2, std::size_t d = 1) {
  const auto di = static_cast<Eigen::Index>(d);
  Point dummy = Point::Zero(di);
  dummy[0] = 20.0 * ell;
  Dataset data(std::vector<Point>{dummy}, std::vector<double>{0.0});
  auto gp = GpPosterior::build(data, KernelParams::isotropic(KernelFamily::SquaredExponential, sigma_f2, ell, d), sigma_n2);
  Point dir = Point::Zero(di);
  dir[0] = -1.0;
  return {std::move(gp), Point::Zero(di), dir};
}

inline double fractional_variance_reduction(const GpPosterior& before, const GpPosterior& after, const Point& x) {
  const double vb = before.predict(x).variance;
  if (!(vb > 0.0)) return 0.0;
  return (vb - after.predict(x).variance) / vb;
}

/// Closed-form suppression radius bound; 0 when the log argument is <= 1.
inline double suppression_radius_bound(double ell, double sigma_f2, double var_star, double sigma_n2, double tau) {
  const double arg = sigma_f2 * sigma_f2 / (tau * var_star * (var_star + sigma_n2));
  return arg > 1.0 ? ell * std::sqrt(std::log(arg)) : 0.0;
}

inline RadiusCheck suppression_radius_check(double ell, double sigma_f2, double sigma_n2, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidInput("suppression_radius_check: tau must lie in (0, 1)");
  if (!(ell > 0.0 && sigma_f2 > 0.0 && sigma_n2 >= 0.0)) throw InvalidInput("suppression_radius_check: bad kernel");
  auto rig = prior_dominated_rig(ell, sigma_f2, sigma_n2);
  RadiusCheck rc;
  rc.tau = tau;
  rc.ell = ell;
  rc.prior_variance_at_star = rig.gp.predict(rig.x_star).variance;
  if (rc.prior_variance_at_star < 0.99 * sigma_f2)
    throw InvalidInput("suppression_radius_check: configuration is not prior-dominated");
  const GpPosterior after = rig.gp.condition(rig.x_star, 0.0);
  rc.predicted_radius = suppression_radius_bound(ell, sigma_f2, rc.prior_variance_at_star, sigma_n2, tau);

  auto reduction = [&](double r) {
    return fractional_variance_reduction(rig.gp, after, Point(rig.x_star + r * rig.direction));
  };
  double lo = 0.0, hi = 10.0 * ell;
  if (reduction(lo) < tau) {
    rc.measured_radius = 0.0;
  } else if (reduction(hi) >= tau) {
    rc.measured_radius = hi;
  } else {
    while (hi - lo > 1e-6 * ell) {
      const double mid = 0.5 * (lo + hi);
      (reduction(mid) >= tau ? lo : hi) = mid;
    }
    rc.measured_radius = lo;
  }
  rc.pass = rc.measured_radius >= rc.predicted_radius - 1e-3 * ell;
  return rc;
}

/// sup over grid of |mu_after - mu_before| after conditioning on (x_star, y).
inline double mean_shift(const GpPosterior& g, const Point& x_star, double y, std::span<const Point> grid) {
  if (grid.empty()) throw InvalidInput("mean_shift: empty grid");
  const GpPosterior after = g.condition(x_star, y);
  double m = 0.0;
  for (const auto& x : grid) m = std::max(m, std::abs(after.predict(x).mean - g.predict(x).mean));
  return m;
}

inline double kb_invariance_check(const GpPosterior& g, const Point& x_star, std::span<const Point> grid) {
  return mean_shift(g, x_star, g.predict(x_star).mean, grid);
}

}  // namespace bocl
