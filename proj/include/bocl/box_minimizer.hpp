#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "bocl/errors.hpp"

namespace bocl {

struct BoxMinimizeOptions {
  int max_iterations = 200;
  // Stop when the projected gradient P(x - g) - x is below this in the inf-norm.
  double pg_tolerance = 1e-6;
  // Stop when an accepted step improves f by less than this fraction of |f|.
  double relative_f_tolerance = 1e-12;
  int memory = 10;
  int max_backtracks = 40;
  // Central-difference step per coordinate. Empty means 1e-6 * box width.
  Eigen::VectorXd fd_step;
};

struct BoxMinimizeResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  // The very first line search failed to make progress from the start.
  bool line_search_failed = false;
};

namespace detail {

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

template <typename F>
Eigen::VectorXd fd_gradient(F& f, const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            const Eigen::VectorXd& h, int& evals) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double up = std::min(x[i] + h[i], hi[i]);
    const double dn = std::max(x[i] - h[i], lo[i]);
    xp[i] = up;
    const double fu = f(static_cast<const Eigen::VectorXd&>(xp));
    xp[i] = dn;
    const double fd = f(static_cast<const Eigen::VectorXd&>(xp));
    xp[i] = x[i];
    evals += 2;
    if (std::isfinite(fu) && std::isfinite(fd) && up > dn)
      g[i] = (fu - fd) / (up - dn);
    else
      g[i] = 0.0;
  }
  return g;
}

}  // namespace detail

/// Bound-constrained limited-memory quasi-Newton minimization with
/// central finite-difference gradients.
///
/// Each iteration takes the two-loop L-BFGS direction restricted to the free
/// variables (those not pinned at a bound by the gradient), falls back to
/// steepest descent when that direction is not a descent direction, and
/// backtracks along the projected path P(x + t d) until the Armijo condition
/// holds. Every evaluated point lies inside [lo, hi]. Objective values that
/// are not finite are treated as rejected trial points.
template <typename F>
BoxMinimizeResult minimize_box(F&& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                               const BoxMinimizeOptions& opt = {}) {
  if (x0.size() != lo.size() || lo.size() != hi.size() || x0.size() == 0)
    throw InvalidInput("minimize_box: dimension mismatch");
  const Eigen::Index n = x0.size();
  const Eigen::VectorXd width = hi - lo;
  if (!(width.array() >= 0.0).all()) throw InvalidInput("minimize_box: lower bound above upper bound");
  const Eigen::VectorXd h = opt.fd_step.size() == n ? opt.fd_step : Eigen::VectorXd(1e-6 * width);
  const double min_width = width.minCoeff() > 0.0 ? width.minCoeff() : 1.0;

  BoxMinimizeResult res;
  res.x = detail::project(x0, lo, hi);
  res.f = f(static_cast<const Eigen::VectorXd&>(res.x));
  res.evaluations = 1;
  if (!std::isfinite(res.f)) {
    res.line_search_failed = true;
    return res;
  }

  Eigen::VectorXd g = detail::fd_gradient(f, res.x, lo, hi, h, res.evaluations);
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;

  auto free_mask = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
    Eigen::VectorXd m = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i)
      if ((x[i] <= lo[i] && grad[i] > 0.0) || (x[i] >= hi[i] && grad[i] < 0.0)) m[i] = 0.0;
    return m;
  };

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    const Eigen::VectorXd pg = detail::project(res.x - g, lo, hi) - res.x;
    if (pg.lpNorm<Eigen::Infinity>() < opt.pg_tolerance) {
      res.converged = true;
      return res;
    }
    const Eigen::VectorXd mask = free_mask(res.x, g);
    const Eigen::VectorXd gm = g.cwiseProduct(mask);

    bool steepest = S.empty();
    Eigen::VectorXd d;
    if (!steepest) {
      Eigen::VectorXd q = gm;
      std::vector<double> a(S.size());
      for (std::size_t k = S.size(); k-- > 0;) {
        a[k] = rho[k] * S[k].cwiseProduct(mask).dot(q);
        q -= a[k] * Y[k].cwiseProduct(mask);
      }
      const Eigen::VectorXd sl = S.back().cwiseProduct(mask), yl = Y.back().cwiseProduct(mask);
      const double yy = yl.squaredNorm();
      const double gamma = yy > 0.0 ? sl.dot(yl) / yy : 1.0;
      q *= gamma > 0.0 ? gamma : 1.0;
      for (std::size_t k = 0; k < S.size(); ++k) {
        const double b = rho[k] * Y[k].cwiseProduct(mask).dot(q);
        q += (a[k] - b) * S[k].cwiseProduct(mask);
      }
      d = -q.cwiseProduct(mask);
      if (!(d.dot(gm) < 0.0) || !d.allFinite()) steepest = true;
    }

    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double t = 1.0;
      if (steepest) {
        S.clear();
        Y.clear();
        rho.clear();
        d = -gm;
        const double dn = d.lpNorm<Eigen::Infinity>();
        if (!(dn > 0.0)) break;
        t = 0.1 * min_width / dn;
      }
      for (int bt = 0; bt < opt.max_backtracks; ++bt, t *= 0.5) {
        x_new = detail::project(res.x + t * d, lo, hi);
        const Eigen::VectorXd step = x_new - res.x;
        if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
        f_new = f(static_cast<const Eigen::VectorXd&>(x_new));
        ++res.evaluations;
        if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * g.dot(step)) {
          accepted = f_new < res.f;
          if (accepted) break;
        }
      }
      if (!accepted) {
        if (steepest) break;
        steepest = true;
      }
    }
    if (!accepted) {
      res.line_search_failed = iter == 0;
      return res;
    }

    const Eigen::VectorXd g_new = detail::fd_gradient(f, x_new, lo, hi, h, res.evaluations);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * y.squaredNorm() && sy > 0.0) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    const double improvement = res.f - f_new;
    const double scale = std::max(std::abs(res.f), std::abs(f_new));
    res.x = x_new;
    res.f = f_new;
    g = g_new;
    res.iterations = iter + 1;
    if (improvement <= opt.relative_f_tolerance * scale) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace bocl
