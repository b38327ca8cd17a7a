#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "bocl/acq_optim.hpp"
#include "bocl/acquisition.hpp"
#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"
#include "bocl/gp.hpp"
#include "bocl/rng.hpp"
#include "bocl/surrogate.hpp"

namespace bocl {

enum class LieKind { CLMin, CLMax, CLMean, KB, Fantasy };

inline std::string to_string(LieKind k) {
  switch (k) {
    case LieKind::CLMin: return "cl-min";
    case LieKind::CLMax: return "cl-max";
    case LieKind::CLMean: return "cl-mean";
    case LieKind::KB: return "kb";
    case LieKind::Fantasy: return "fantasy";
  }
  return "?";
}

struct LieStrategy {
  LieKind kind = LieKind::CLMin;
};

struct BatchResult {
  std::vector<Point> points;
  std::vector<double> lies;  // normalized units; empty for LP and random batches
  std::vector<double> acq_values;
  std::vector<double> sigma_before;  // predictive sd at x_j before conditioning on it
  std::vector<double> sigma_after;   // and after
  bool degraded = false;             // some step fell back to its best start
};

/// Pseudo-observation for x_star. CL constants come from the real data only.
template <ConditioningSurrogate S>
double lie_value(const LieStrategy& lie, const S& model, const Dataset& real, const Point& x_star, RngStream& rng) {
  switch (lie.kind) {
    case LieKind::CLMin: return real.min_target();
    case LieKind::CLMax: return real.max_target();
    case LieKind::CLMean: return real.mean_target();
    case LieKind::KB: return model.predict(x_star).mean;
    case LieKind::Fantasy: {
      const auto m = model.predict(x_star);
      const double sd = std::sqrt(m.variance + observation_noise_variance(model));
      const double z = rng.normal();
      return sd > 0.0 ? m.mean + sd * z : m.mean;
    }
  }
  return 0.0;
}

/// Greedy batch construction with pseudo-observations. The incumbent f_best
/// is the best real observation and stays fixed for the whole batch.
/// LhsRandom starts are redrawn every step; fixed and provided starts are
/// reused as is.
template <ConditioningSurrogate S>
BatchResult select_batch(const S& surrogate, const Dataset& data, int q, const LieStrategy& lie, const AcqSpec& spec,
                         const Bounds& b, const StartSet& starts, RngStream& rng) {
  if (q < 1) throw InvalidInput("select_batch: q must be >= 1");
  spec.validate();
  const double f_best = data.min_target();
  BatchResult out;
  S model = surrogate;
  for (int j = 0; j < q; ++j) {
    const auto ju = static_cast<std::uint64_t>(j);
    RngStream start_rng = rng.substream("acq-starts", ju);
    auto acq = [&](const Point& x) { return acq_value(spec, model.predict(x), f_best); };
    const auto best = maximize_acq(acq, b, starts, start_rng);
    out.degraded = out.degraded || best.degraded;
    out.points.push_back(best.x);
    out.acq_values.push_back(best.value);
    out.sigma_before.push_back(model.predict(best.x).sd());
    RngStream lie_rng = rng.substream("lie", ju);
    const double y = lie_value(lie, model, data, best.x, lie_rng);
    out.lies.push_back(y);
    RngStream cond_rng = rng.substream("condition", ju);
    model = model.condition(best.x, y, cond_rng);
    out.sigma_after.push_back(model.predict(best.x).sd());
  }
  return out;
}

/// Local penalization: greedy maximization of base acquisition times the
/// product of penalties around the points chosen so far. The surrogate is
/// never conditioned. UCB is made nonnegative by subtracting its minimum
/// over the start points of each step and clamping at zero.
inline BatchResult select_batch_lp(const GpPosterior& g, const Dataset& data, int q, const AcqSpec& spec,
                                   const Bounds& b, const StartSet& starts, RngStream& rng) {
  if (q < 1) throw InvalidInput("select_batch_lp: q must be >= 1");
  spec.validate();
  const double f_best = data.min_target();
  LpPenalty pen;
  pen.lengthscale = geometric_mean_lengthscale(g.params());
  BatchResult out;
  for (int j = 0; j < q; ++j) {
    RngStream start_rng = rng.substream("acq-starts", static_cast<std::uint64_t>(j));
    const auto pts = materialize(starts, b, start_rng);
    double shift = 0.0;
    if (spec.kind == AcqKind::UCB) {
      shift = std::numeric_limits<double>::infinity();
      for (const auto& p : pts) shift = std::min(shift, acq_value(spec, g.predict(p), f_best));
    }
    auto acq = [&](const Point& x) {
      const double base = std::max(acq_value(spec, g.predict(x), f_best) - shift, 0.0);
      return lp_acq_value(base, pen, x);
    };
    const auto best = maximize_from(
        acq, b, starts.mode == StartMode::LhsRandom ? screen_starts(acq, pts, starts.count) : pts);
    out.degraded = out.degraded || best.degraded;
    out.points.push_back(best.x);
    out.acq_values.push_back(best.value);
    const double sd = g.predict(best.x).sd();
    out.sigma_before.push_back(sd);
    out.sigma_after.push_back(sd);
    pen.anchors.push_back(best.x);
  }
  return out;
}

inline BatchResult select_batch_random(const Bounds& b, int q, RngStream& rng) {
  if (q < 1) throw InvalidInput("select_batch_random: q must be >= 1");
  BatchResult out;
  const auto d = static_cast<Eigen::Index>(b.dim());
  for (int j = 0; j < q; ++j) {
    Point u(d);
    for (Eigen::Index i = 0; i < d; ++i) u[i] = rng.uniform();
    out.points.push_back(clip_to_bounds(b.from_unit(u), b));
  }
  return out;
}

}  // namespace bocl
