#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
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
#include "bocl/parallel.hpp"
#include "bocl/parametric.hpp"
#include "bocl/rng.hpp"
#include "bocl/stats.hpp"

namespace bocl {

enum class Strategy { CLMin, CLMax, CLMean, KB, Fantasy, LP, RandomBatch, Sequential };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::CLMin: return "cl-min";
    case Strategy::CLMax: return "cl-max";
    case Strategy::CLMean: return "cl-mean";
    case Strategy::KB: return "kb";
    case Strategy::Fantasy: return "fantasy";
    case Strategy::LP: return "lp";
    case Strategy::RandomBatch: return "random";
    case Strategy::Sequential: return "sequential";
  }
  return "?";
}

inline const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> v{Strategy::CLMin, Strategy::CLMax, Strategy::CLMean, Strategy::KB,
                                       Strategy::Fantasy, Strategy::LP, Strategy::RandomBatch, Strategy::Sequential};
  return v;
}

inline Strategy strategy_by_name(std::string_view s) {
  for (auto k : all_strategies())
    if (to_string(k) == s) return k;
  throw InvalidInput("unknown strategy '" + std::string(s) + "'");
}

struct BoConfig {
  Strategy strategy = Strategy::CLMin;
  int q = 3;
  int budget = 50;          // evaluations after the initial design
  std::size_t n_init = 0;   // 0 means 2 d
  double noise_scale = 0.0; // noise sd as a multiple of std(initial targets)
  AcqSpec acq = AcqSpec::ei();
  std::size_t restarts = 10;
  std::size_t start_pool = 1000;
  bool log_progress = false;
};

struct BoTrace {
  std::string strategy;
  std::string benchmark;
  std::uint64_t seed = 0;
  int q = 0;
  std::size_t n_init = 0;
  double noise_sd = 0.0;
  // One entry per evaluation, initial design first (iteration 0).
  std::vector<int> iteration;
  std::vector<Point> points;
  std::vector<double> y_observed;
  std::vector<double> y_true;
  std::vector<double> best_so_far;       // over observed values
  std::vector<double> best_true_so_far;  // over noise-free values
  // One entry per BO iteration.
  std::vector<double> batch_diversity;   // mean pairwise distance, 0 for single points
  std::vector<double> wall_clock_per_iter;

  double final_best() const { return best_so_far.back(); }
  double final_best_true() const { return best_true_so_far.back(); }
  double mean_diversity() const {
    if (batch_diversity.empty()) return 0.0;
    double s = 0.0;
    for (double v : batch_diversity) s += v;
    return s / static_cast<double>(batch_diversity.size());
  }
};

namespace detail {

inline void record_eval(BoTrace& t, int iter, const Point& x, double y_obs, double y_true) {
  t.iteration.push_back(iter);
  t.points.push_back(x);
  t.y_observed.push_back(y_obs);
  t.y_true.push_back(y_true);
  t.best_so_far.push_back(t.best_so_far.empty() ? y_obs : std::min(t.best_so_far.back(), y_obs));
  t.best_true_so_far.push_back(t.best_true_so_far.empty() ? y_true : std::min(t.best_true_so_far.back(), y_true));
}

inline double population_std(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace detail

/// One BO run. The initial design depends only on the seed, so runs of
/// different strategies with the same seed share it. The GP is refit on all
/// real observations every iteration; the final batch is truncated so the
/// number of evaluations after the initial design equals the budget.
inline BoTrace run_bo(const Benchmark& bm, const BoConfig& cfg, std::uint64_t seed) {
  const int q = cfg.strategy == Strategy::Sequential ? 1 : cfg.q;
  if (q < 1) throw InvalidInput("run_bo: q must be >= 1");
  if (cfg.budget < q) throw InvalidInput("run_bo: budget must be >= q");
  const std::size_t n_init = cfg.n_init == 0 ? 2 * bm.dim : cfg.n_init;
  if (n_init < bm.dim + 2) throw InvalidInput("run_bo: n_init must be at least d + 2");
  if (!(cfg.noise_scale >= 0.0)) throw InvalidInput("run_bo: noise_scale must be >= 0");

  RngStream root(seed);
  RngStream lhs_rng = root.substream("lhs");
  const auto design = lhs_design(bm, n_init, lhs_rng);

  BoTrace t;
  t.strategy = to_string(cfg.strategy);
  t.benchmark = bm.name;
  t.seed = seed;
  t.q = q;
  t.n_init = n_init;
  t.noise_sd = cfg.noise_scale * detail::population_std(design.values);
  const RngStream noise_root = root.substream("noise");
  std::uint64_t eval_index = 0;
  auto observe = [&](double y) {
    RngStream nr = noise_root.substream(eval_index++);
    return add_noise(y, t.noise_sd, nr);
  };
  for (std::size_t i = 0; i < design.points.size(); ++i)
    detail::record_eval(t, 0, design.points[i], observe(design.values[i]), design.values[i]);

  const StartSet starts = lhs_starts(cfg.restarts, cfg.start_pool);
  int done = 0;
  for (int it = 1; done < cfg.budget; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const int qq = std::min(q, cfg.budget - done);
    const auto iu = static_cast<std::uint64_t>(it);
    BatchResult br;
    if (cfg.strategy == Strategy::RandomBatch) {
      RngStream rr = root.substream("random-batch", iu);
      br = select_batch_random(bm.bounds, qq, rr);
    } else {
      const Dataset data = Dataset::from_raw(t.points, t.y_observed);
      RngStream fit_rng = root.substream("fit", iu);
      const GpPosterior gp = fit_gp(data, fit_rng, GpFitOptions::for_bounds(bm.bounds));
      RngStream batch_rng = root.substream("batch", iu);
      switch (cfg.strategy) {
        case Strategy::LP:
          br = select_batch_lp(gp, data, qq, cfg.acq, bm.bounds, starts, batch_rng);
          break;
        case Strategy::CLMax:
          br = select_batch(gp, data, qq, {LieKind::CLMax}, cfg.acq, bm.bounds, starts, batch_rng);
          break;
        case Strategy::CLMean:
          br = select_batch(gp, data, qq, {LieKind::CLMean}, cfg.acq, bm.bounds, starts, batch_rng);
          break;
        case Strategy::KB:
          br = select_batch(gp, data, qq, {LieKind::KB}, cfg.acq, bm.bounds, starts, batch_rng);
          break;
        case Strategy::Fantasy:
          br = select_batch(gp, data, qq, {LieKind::Fantasy}, cfg.acq, bm.bounds, starts, batch_rng);
          break;
        default:
          br = select_batch(gp, data, qq, {LieKind::CLMin}, cfg.acq, bm.bounds, starts, batch_rng);
          break;
      }
    }
    for (const auto& x : br.points) {
      const double y = evaluate(bm, x);
      detail::record_eval(t, it, x, observe(y), y);
    }
    done += qq;
    t.batch_diversity.push_back(br.points.size() >= 2 ? distance_summary(br.points).mean : 0.0);
    t.wall_clock_per_iter.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (cfg.log_progress)
      std::fprintf(stderr, "%s %s seed=%llu iter=%d evals=%d best=%.6g\n", bm.name.c_str(), t.strategy.c_str(),
                   static_cast<unsigned long long>(seed), it, done, t.best_so_far.back());
  }
  return t;
}

/// Runs for every seed, in seed order, on up to `workers` threads.
inline std::vector<BoTrace> run_bo_seeds(const Benchmark& bm, const BoConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                         unsigned workers = worker_count()) {
  std::vector<BoTrace> out(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) { out[i] = run_bo(bm, cfg, seeds[i]); });
  return out;
}

inline std::vector<double> final_values(const std::vector<BoTrace>& traces) {
  std::vector<double> v;
  for (const auto& t : traces) v.push_back(t.final_best());
  return v;
}

struct TimingRow {
  std::string surrogate;
  std::string mode;
  double median_seconds = 0.0;           // per conditioning step
  std::vector<double> per_repeat;        // median-of-steps inside each repeat
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

/// Per-step cost of absorbing one pseudo-observation: GP rank-one update,
/// MQ-RBF re-solve, NN ensemble retrain, RF rebuild. Each repeat times q
/// consecutive steps from a fresh fit; rows report the median over repeats.
inline std::vector<TimingRow> timing_harness(std::size_t n, std::size_t d, int q, int repeats, std::uint64_t seed = 0) {
  if (repeats < 3) throw InvalidInput("timing_harness: repeats must be >= 3");
  if (q < 1 || n < 4 || d < 1) throw InvalidInput("timing_harness: invalid size");
  const Benchmark bm = d == 6 ? make_hartmann6() : make_ackley(d);
  RngStream root(seed);
  RngStream lhs_rng = root.substream("lhs");
  const Dataset data = lhs_init(bm, n, lhs_rng);
  RngStream pts_rng = root.substream("points");
  const auto xs = lhs_points(bm.bounds, static_cast<std::size_t>(q), pts_rng);
  const double lie = data.min_target();

  using clock = std::chrono::steady_clock;
  auto time_steps = [&](auto model, RngStream& rng) {
    std::vector<double> steps;
    for (const auto& x : xs) {
      const auto t0 = clock::now();
      model = model.condition(x, lie, rng);
      steps.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }
    return detail::median(steps);
  };

  RngStream fit_rng = root.substream("fit");
  const GpPosterior gp = fit_gp(data, fit_rng, GpFitOptions::for_bounds(bm.bounds));
  const RbfModel rbf = RbfModel::fit(data);
  std::vector<TimingRow> rows{{"gp", "condition", 0.0, {}},
                              {"mq-rbf", "re-solve", 0.0, {}},
                              {"nn", "retrain", 0.0, {}},
                              {"rf", "rebuild", 0.0, {}}};
  for (int r = 0; r < repeats; ++r) {
    RngStream rr = root.substream("repeat", static_cast<std::uint64_t>(r));
    RngStream a = rr.substream("gp"), b = rr.substream("rbf"), c = rr.substream("nn"), e = rr.substream("rf");
    rows[0].per_repeat.push_back(time_steps(gp, a));
    rows[1].per_repeat.push_back(time_steps(rbf, b));
    RngStream nn_fit = rr.substream("nn-fit"), rf_fit = rr.substream("rf-fit");
    rows[2].per_repeat.push_back(time_steps(NnEnsemble::fit(data, nn_fit, {}, true), c));
    rows[3].per_repeat.push_back(time_steps(ForestModel::fit(data, rf_fit, {}, true), e));
  }
  for (auto& row : rows) row.median_seconds = detail::median(row.per_repeat);
  return rows;
}

}  // namespace bocl
