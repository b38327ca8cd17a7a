#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "bocl/bench.hpp"
#include "bocl/box_minimizer.hpp"
#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"
#include "bocl/rng.hpp"

namespace bocl {

enum class StartMode { FixedDiagonal, LhsRandom, Provided };

struct StartSet {
  StartMode mode = StartMode::LhsRandom;
  std::size_t count = 10;
  // LhsRandom only: when larger than count, draw this many LHS candidates and
  // keep the count best under the objective as starts.
  std::size_t pool = 0;
  std::vector<Point> points;  // used when Provided or already materialized
};

/// 0.2, 0.5 and 0.8 along the unit diagonal, mapped into the box.
inline StartSet fixed_starts(const Bounds& b) {
  StartSet s;
  s.mode = StartMode::FixedDiagonal;
  s.count = 3;
  const auto d = static_cast<Eigen::Index>(b.dim());
  for (double t : {0.2, 0.5, 0.8}) s.points.push_back(b.from_unit(Point::Constant(d, t)));
  return s;
}

inline StartSet lhs_starts(std::size_t count, std::size_t pool = 0) {
  StartSet s;
  s.mode = StartMode::LhsRandom;
  s.count = count;
  s.pool = pool;
  return s;
}

inline StartSet provided_starts(std::vector<Point> pts) {
  StartSet s;
  s.mode = StartMode::Provided;
  s.count = pts.size();
  s.points = std::move(pts);
  return s;
}

/// Candidate start points. LhsRandom draws a fresh design of max(count, pool)
/// points from rng; the other modes return their stored points unchanged.
inline std::vector<Point> materialize(const StartSet& s, const Bounds& b, RngStream& rng) {
  switch (s.mode) {
    case StartMode::FixedDiagonal:
      return s.points.empty() ? fixed_starts(b).points : s.points;
    case StartMode::Provided:
      if (s.points.empty()) throw InvalidInput("StartSet: no provided points");
      return s.points;
    case StartMode::LhsRandom:
      if (s.count < 1) throw InvalidInput("StartSet: count must be >= 1");
      return lhs_points(b, std::max(s.count, s.pool), rng);
  }
  return {};
}

/// Keep the `count` candidates with the highest objective (stable order).
template <typename F>
std::vector<Point> screen_starts(F&& objective, std::vector<Point> candidates, std::size_t count) {
  if (candidates.size() <= count) return candidates;
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = objective(static_cast<const Point&>(candidates[i]));
    scored.emplace_back(std::isfinite(v) ? v : -std::numeric_limits<double>::infinity(), i);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(std::move(candidates[scored[k].second]));
  return out;
}

struct AcqOptimResult {
  Point x;
  double value = -std::numeric_limits<double>::infinity();
  bool degraded = false;  // every local search failed to move off its start
};

/// Maximize over the box by projected quasi-Newton search from each start.
/// Ties go to the lowest start index.
template <typename F>
AcqOptimResult maximize_from(F&& objective, const Bounds& b, const std::vector<Point>& starts) {
  if (starts.empty()) throw InvalidInput("maximize_acq: empty start set");
  auto neg = [&](const Eigen::VectorXd& x) {
    const double v = objective(static_cast<const Point&>(x));
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  BoxMinimizeOptions opt;
  opt.max_iterations = 200;
  opt.pg_tolerance = 1e-6;
  opt.fd_step = 1e-6 * b.width();

  AcqOptimResult best;
  bool any_moved = false;
  for (const auto& s0 : starts) {
    const Point s = clip_to_bounds(s0, b);
    const auto r = minimize_box(neg, s, b.lower(), b.upper(), opt);
    if (!r.line_search_failed) any_moved = true;
    const double v = -r.f;
    if (v > best.value) {
      best.value = v;
      best.x = r.x;
    }
  }
  if (best.x.size() == 0) {
    best.x = clip_to_bounds(starts.front(), b);
    best.value = objective(static_cast<const Point&>(best.x));
  }
  best.x = clip_to_bounds(best.x, b);
  best.degraded = !any_moved;
  return best;
}

template <typename F>
AcqOptimResult maximize_acq(F&& objective, const Bounds& b, const StartSet& starts, RngStream& rng) {
  auto pts = materialize(starts, b, rng);
  if (starts.mode == StartMode::LhsRandom) pts = screen_starts(objective, std::move(pts), starts.count);
  return maximize_from(objective, b, pts);
}

}  // namespace bocl
