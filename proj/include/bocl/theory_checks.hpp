#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "bocl/acq_optim.hpp"
#include "bocl/acquisition.hpp"
#include "bocl/batch.hpp"
#include "bocl/core_types.hpp"
#include "bocl/diagnostics.hpp"
#include "bocl/gp.hpp"
#include "bocl/mq_rbf.hpp"
#include "bocl/parametric.hpp"
#include "bocl/rng.hpp"

namespace bocl {

struct CheckRecord {
  std::string name;
  double value = 0.0;      // the measured quantity
  double threshold = 0.0;  // what it was compared against
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::vector<Point> uniform_points(std::size_t n, std::size_t d, RngStream& rng) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Point p(static_cast<Eigen::Index>(d));
    for (auto& v : p) v = rng.uniform();
    pts.push_back(p);
  }
  return pts;
}

inline double smooth_test_function(const Point& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::sin(3.0 * x[i] + 0.5 * static_cast<double>(i)) * (1.0 + x[i]);
  return s;
}

}  // namespace detail

/// Random data and hyperparameters on the unit cube; lengthscales scale with
/// sqrt(d) so the kernel matrix stays usable at the fixed noise level.
struct RandomGpConfig {
  GpPosterior gp;
  Point x_star;
  std::vector<Point> grid;
};

inline RandomGpConfig random_gp_config(std::size_t d, std::size_t n, RngStream& rng, std::size_t grid_size = 100) {
  auto pts = detail::uniform_points(n, d, rng);
  std::vector<double> y;
  for (const auto& p : pts) y.push_back(detail::smooth_test_function(p) + 0.1 * rng.normal());
  const KernelFamily fam = rng.uniform() < 0.5 ? KernelFamily::SquaredExponential : KernelFamily::Matern52;
  const double sf2 = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
  Eigen::VectorXd ell(static_cast<Eigen::Index>(d));
  const double root_d = std::sqrt(static_cast<double>(d));
  for (auto& l : ell) l = root_d * std::exp(rng.uniform(std::log(0.05), std::log(0.3)));
  auto gp = GpPosterior::build(Dataset::from_raw(pts, y), KernelParams(fam, sf2, ell));
  Point xs(static_cast<Eigen::Index>(d));
  for (auto& v : xs) v = rng.uniform();
  return {std::move(gp), xs, detail::uniform_points(grid_size, d, rng)};
}

struct EquivalenceError {
  double mean = 0.0;
  double variance = 0.0;
};

/// max |incremental - full refit| over the grid, hyperparameters frozen.
inline EquivalenceError conditioning_equivalence_error(const RandomGpConfig& c, double y_tilde) {
  const GpPosterior inc = c.gp.condition(c.x_star, y_tilde);
  const GpPosterior full =
      GpPosterior::build(c.gp.data().augmented(c.x_star, y_tilde), c.gp.params(), c.gp.noise_variance());
  EquivalenceError e;
  for (const auto& x : c.grid) {
    const auto a = inc.predict(x), b = full.predict(x);
    e.mean = std::max(e.mean, std::abs(a.mean - b.mean));
    e.variance = std::max(e.variance, std::abs(a.variance - b.variance));
  }
  return e;
}

inline CheckRecord check_conditioning_equivalence(RngStream rng, int configs = 50) {
  double worst = 0.0;
  const std::size_t dims[] = {1, 2, 6};
  for (int i = 0; i < configs; ++i) {
    RngStream r = rng.substream("config", static_cast<std::uint64_t>(i));
    const std::size_t d = dims[r.uniform_index(3)];
    const std::size_t n = 5 + static_cast<std::size_t>(r.uniform_index(36));
    const auto c = random_gp_config(d, n, r);
    const auto e = conditioning_equivalence_error(c, r.normal());
    worst = std::max({worst, e.mean, e.variance});
  }
  return {"conditioning-equivalence", worst, 1e-8, worst <= 1e-8,
          std::to_string(configs) + " configurations, max abs error in mean and variance"};
}

inline std::vector<CheckRecord> check_kb_invariance(RngStream rng, int configs = 20) {
  double kb_worst = 0.0, cl_min_contrast = std::numeric_limits<double>::infinity();
  for (int i = 0; i < configs; ++i) {
    RngStream r = rng.substream("config", static_cast<std::uint64_t>(i));
    const std::size_t d = 1 + static_cast<std::size_t>(r.uniform_index(3));
    const auto c = random_gp_config(d, 10 + static_cast<std::size_t>(r.uniform_index(20)), r);
    kb_worst = std::max(kb_worst, kb_invariance_check(c.gp, c.x_star, c.grid));
    // Contrast: the CL-min lie moves the mean at x_star itself.
    const std::vector<Point> near{c.x_star};
    cl_min_contrast = std::min(cl_min_contrast, mean_shift(c.gp, c.x_star, c.gp.data().min_target(), near));
  }
  return {{"kb-mean-invariance", kb_worst, 1e-8, kb_worst <= 1e-8, "sup-norm mean shift under the KB lie"},
          {"cl-min-mean-shift-contrast", cl_min_contrast, 1e-4, cl_min_contrast > 1e-4,
           "smallest CL-min mean shift at x_star over configurations"}};
}

/// Replay one point sequence through every deterministic lie; the variance
/// surfaces must agree bit for bit.
inline CheckRecord check_lie_independent_variance(RngStream rng, int configs = 10) {
  bool identical = true;
  for (int i = 0; i < configs && identical; ++i) {
    RngStream r = rng.substream("config", static_cast<std::uint64_t>(i));
    const auto c = random_gp_config(2, 15, r, 50);
    const auto seq = detail::uniform_points(4, 2, r);
    std::vector<std::vector<double>> surfaces;
    for (auto kind : {LieKind::CLMin, LieKind::CLMax, LieKind::CLMean, LieKind::KB}) {
      GpPosterior g = c.gp;
      for (const auto& x : seq) {
        RngStream unused(0);
        g = g.condition(x, lie_value(LieStrategy{kind}, g, c.gp.data(), x, unused));
      }
      std::vector<double> s;
      for (const auto& x : c.grid) s.push_back(g.predict(x).variance);
      surfaces.push_back(std::move(s));
    }
    for (std::size_t k = 1; k < surfaces.size(); ++k)
      identical = identical &&
                  std::memcmp(surfaces[k].data(), surfaces[0].data(), surfaces[0].size() * sizeof(double)) == 0;
  }
  return {"lie-independent-variance", identical ? 0.0 : 1.0, 0.0, identical,
          "post-conditioning variance bitwise equal across CL-min/max/mean and KB"};
}

inline std::vector<CheckRecord> check_suppression_radius(double sigma_n2 = 1e-9) {
  std::vector<CheckRecord> out;
  for (double tau : {0.25, 0.5, 0.75}) {
    for (double ell : {0.3, 1.0}) {
      const auto rc = suppression_radius_check(ell, 1.0, sigma_n2, tau);
      out.push_back({"suppression-radius tau=" + std::to_string(tau).substr(0, 4) + " ell=" +
                         std::to_string(ell).substr(0, 3),
                     rc.measured_radius / ell, rc.predicted_radius / ell - 1e-3, rc.pass,
                     "measured / ell against bound / ell"});
    }
  }
  return out;
}

/// GP and MQ-RBF batches have pairwise-distinct points for every
/// sigma-monotone acquisition.
inline CheckRecord check_no_duplicates(RngStream rng, int seeds = 5) {
  double worst = std::numeric_limits<double>::infinity();
  const Benchmark bm = make_hartmann6();
  const Bounds& box = bm.bounds;
  for (int s = 0; s < seeds; ++s) {
    RngStream r = rng.substream("seed", static_cast<std::uint64_t>(s));
    RngStream lhs_rng = r.substream("lhs");
    const Dataset data = lhs_init(bm, 2 * bm.dim, lhs_rng);
    RngStream fit_rng = r.substream("fit");
    const GpPosterior gp = fit_gp(data, fit_rng, GpFitOptions::for_bounds(box));
    const RbfModel rbf = RbfModel::fit(data);
    for (const auto& spec : {AcqSpec::ei(), AcqSpec::ucb(), AcqSpec::pi()}) {
      for (int q : {2, 3, 10}) {
        RngStream b1 = r.substream("gp-batch", static_cast<std::uint64_t>(q));
        RngStream b2 = r.substream("rbf-batch", static_cast<std::uint64_t>(q));
        const auto g = select_batch(gp, data, q, {LieKind::CLMin}, spec, box, lhs_starts(10, 200), b1);
        const auto m = select_batch(rbf, data, q, {LieKind::CLMin}, spec, box, lhs_starts(10, 200), b2);
        worst = std::min({worst, distance_summary(g.points).min, distance_summary(m.points).min});
      }
    }
  }
  return {"no-duplicate-batch-points", worst, 1e-9, worst > 1e-9,
          "min pairwise distance over GP and MQ-RBF batches, EI/UCB/PI, q in {2,3,10}"};
}

/// Without refitting, conditioning leaves parametric models unchanged and
/// every batch member coincides.
inline CheckRecord check_parametric_degeneracy(RngStream rng) {
  const Bounds box = Bounds::cube(2, 0.0, 1.0);
  RngStream lr = rng.substream("lhs");
  auto pts = lhs_points(box, 12, lr);
  std::vector<double> y;
  for (const auto& p : pts) y.push_back(detail::smooth_test_function(p));
  const Dataset data = Dataset::from_raw(pts, y);
  NnTrainingConfig small;
  small.members = 3;
  small.hidden = 16;
  small.max_iterations = 200;
  RngStream nr = rng.substream("nn"), fr = rng.substream("rf");
  const auto nn = NnEnsemble::fit(data, nr, small);
  const auto rf = ForestModel::fit(data, fr, {50, 2});
  const auto grid = detail::uniform_points(50, 2, lr);
  bool ok = true;
  RngStream cr = rng.substream("cond");
  const Point xs = grid.front();
  const auto nn2 = nn.condition(xs, data.min_target(), cr);
  const auto rf2 = rf.condition(xs, data.min_target(), cr);
  for (const auto& x : grid) {
    const auto a = nn.predict(x), b = nn2.predict(x), c = rf.predict(x), d = rf2.predict(x);
    ok = ok && a.mean == b.mean && a.variance == b.variance && c.mean == d.mean && c.variance == d.variance;
  }
  auto all_equal = [](const std::vector<Point>& p) {
    for (const auto& v : p)
      if (std::memcmp(v.data(), p.front().data(), sizeof(double) * static_cast<std::size_t>(v.size())) != 0)
        return false;
    return true;
  };
  RngStream b1 = rng.substream("b1"), b2 = rng.substream("b2");
  ok = ok && all_equal(select_batch(nn, data, 3, {LieKind::CLMin}, AcqSpec::ei(), box, fixed_starts(box), b1).points);
  ok = ok && all_equal(select_batch(rf, data, 3, {LieKind::CLMin}, AcqSpec::ei(), box, fixed_starts(box), b2).points);
  return {"parametric-degeneracy", ok ? 0.0 : 1.0, 0.0, ok,
          "NN and RF predictions bitwise unchanged by condition; batch members bitwise equal"};
}

/// Consecutive UCB batch points on a prior-dominated 1-d GP are at least
/// 0.8 lengthscales apart.
inline CheckRecord check_ucb_separation(RngStream rng) {
  const double ell = 1.0;
  auto rig = prior_dominated_rig(ell, 1.0, 1e-6);
  const Bounds box = Bounds::cube(1, -5.0 * ell, 5.0 * ell);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 5; ++s) {
    RngStream r = rng.substream("seed", static_cast<std::uint64_t>(s));
    const auto br =
        select_batch(rig.gp, rig.gp.data(), 4, {LieKind::KB}, AcqSpec::ucb(), box, lhs_starts(10, 100), r);
    for (std::size_t j = 1; j < br.points.size(); ++j) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < j; ++i) m = std::min(m, (br.points[j] - br.points[i]).norm());
      worst = std::min(worst, m / ell);
    }
  }
  return {"ucb-separation", worst, 0.8, worst >= 0.8, "min distance to earlier batch points, in lengthscales"};
}

inline std::vector<CheckRecord> check_implicit_penalizer(RngStream rng, int configs = 20) {
  const double ell = 1.0;
  auto rig = prior_dominated_rig(ell, 1.0, 1e-6, 2);
  const GpPosterior& g = rig.gp;
  const Point& xs = rig.x_star;
  const GpPosterior after = g.condition(xs, g.predict(xs).mean);
  const double f_best = g.predict(xs).mean;  // Z = 0 at x_star
  Point far = xs;
  far[1] = 10.0 * ell;
  const double psi_far = implicit_penalizer(g, after, far, f_best).psi;
  const double psi_at = implicit_penalizer(g, after, xs, f_best).psi;

  // Exploration regime: incumbent at the predictive mean, so Z = 0.
  double worst_rel = 0.0;
  for (int i = 0; i < configs; ++i) {
    RngStream r = rng.substream("config", static_cast<std::uint64_t>(i));
    Point x = xs;
    x[1] = r.uniform(0.2, 2.5) * ell;
    x[0] = -r.uniform(0.0, 1.0) * ell;
    const double fb = g.predict(x).mean;
    const auto ip = implicit_penalizer(g, after, x, fb);
    const double approx = implicit_penalizer_approx(g, xs, x);
    if (approx > 0.0) worst_rel = std::max(worst_rel, std::abs(ip.psi - approx) / approx);
  }
  return {{"implicit-penalizer-far-field", psi_far, 0.99, psi_far >= 0.99, "EI ratio 10 lengthscales away"},
          {"implicit-penalizer-at-point", psi_at, 0.05, psi_at <= 0.05, "EI ratio at the conditioned point"},
          {"implicit-penalizer-approximation", worst_rel, 0.1, worst_rel <= 0.1,
           "relative gap between EI ratio and the closed-form variance ratio, exploration regime"}};
}

inline std::vector<CheckRecord> check_delta_ei(RngStream rng, int configs = 20) {
  const double ell = 1.0;
  auto rig = prior_dominated_rig(ell, 1.0, 1e-6, 2);
  const GpPosterior& g = rig.gp;
  const Point& xs = rig.x_star;
  const double mu_s = g.predict(xs).mean;
  const double sd_s = g.predict(xs).sd();
  double kb_max = -std::numeric_limits<double>::infinity();
  double worst_rel = 0.0;
  bool signs = true;
  for (int i = 0; i < configs; ++i) {
    RngStream r = rng.substream("config", static_cast<std::uint64_t>(i));
    const double f_best = mu_s + r.uniform(-1.0, 1.0) * sd_s;
    // KB: strictly negative within a lengthscale.
    Point near = xs;
    near[1] = r.uniform(0.1, 1.0) * ell;
    kb_max = std::max(kb_max, delta_ei_first_order(g, near, xs, mu_s, f_best));
    // CL-type lie close to the mean, evaluated 2-3 lengthscales out.
    const double y = mu_s - r.uniform(0.1, 0.5) * sd_s;
    Point x = xs;
    const double ang = r.uniform(0.0, 2.0 * std::numbers::pi), rad = r.uniform(2.0, 3.0) * ell;
    x[0] = std::cos(ang) * rad;
    x[1] = std::sin(ang) * rad;
    const GpPosterior after = g.condition(xs, y);
    const auto mb = g.predict(x), ma = after.predict(x);
    const double exact = expected_improvement(ma.mean, ma.sd(), f_best) - expected_improvement(mb.mean, mb.sd(), f_best);
    const double first = delta_ei_first_order(g, x, xs, y, f_best);
    signs = signs && ((exact > 0.0) == (first > 0.0));
    if (exact != 0.0) worst_rel = std::max(worst_rel, std::abs(first - exact) / std::abs(exact));
  }
  Point far = xs;
  far[1] = 10.0 * ell;
  const double far_val = std::abs(delta_ei_first_order(g, far, xs, mu_s - 0.5 * sd_s, mu_s));
  return {{"delta-ei-kb-negative", kb_max, 0.0, kb_max < 0.0, "largest first-order change near x_star, KB lie"},
          {"delta-ei-far-field", far_val, 1e-12, far_val <= 1e-12, "first-order change 10 lengthscales away"},
          {"delta-ei-first-order-accuracy", worst_rel, 0.5, signs && worst_rel <= 0.5,
           signs ? "max relative error vs exact change" : "sign mismatch vs exact change"}};
}

inline std::vector<CheckRecord> run_theory_checks(std::uint64_t seed = 0) {
  RngStream root(seed);
  std::vector<CheckRecord> out;
  auto add = [&](auto&& v) {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, CheckRecord>)
      out.push_back(v);
    else
      out.insert(out.end(), v.begin(), v.end());
  };
  add(check_conditioning_equivalence(root.substream("equivalence")));
  add(check_kb_invariance(root.substream("kb")));
  add(check_lie_independent_variance(root.substream("variance")));
  add(check_suppression_radius());
  add(check_no_duplicates(root.substream("distinct")));
  add(check_parametric_degeneracy(root.substream("degeneracy")));
  add(check_ucb_separation(root.substream("separation")));
  add(check_implicit_penalizer(root.substream("penalizer")));
  add(check_delta_ei(root.substream("delta-ei")));
  return out;
}

}  // namespace bocl
