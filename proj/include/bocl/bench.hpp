#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"
#include "bocl/rng.hpp"

namespace bocl {

struct Benchmark {
  std::string name;
  std::size_t dim = 0;
  Bounds bounds;
  double known_min_value = 0.0;
  std::optional<Point> known_min_point;
  std::function<double(const Point&)> fn;
};

namespace detail {

inline double hartmann6(const Point& x) {
  static constexpr double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static constexpr double A[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                     {0.05, 10, 17, 0.1, 8, 14},
                                     {3, 3.5, 1.7, 10, 17, 8},
                                     {17, 8, 0.05, 10, 0.1, 14}};
  static constexpr double P[4][6] = {{1312, 1696, 5569, 124, 8283, 5886},
                                     {2329, 4135, 8307, 3736, 1004, 9991},
                                     {2348, 1451, 3522, 2883, 3047, 6650},
                                     {4047, 8828, 8732, 5743, 1091, 381}};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double d = x[j] - 1e-4 * P[i][j];
      inner += A[i][j] * d * d;
    }
    s += alpha[i] * std::exp(-inner);
  }
  return -s;
}

inline double ackley(const Point& x) {
  constexpr double a = 20.0, b = 0.2, c = 2.0 * std::numbers::pi;
  const double n = static_cast<double>(x.size());
  double sq = 0.0, cs = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sq += x[i] * x[i];
    cs += std::cos(c * x[i]);
  }
  return -a * std::exp(-b * std::sqrt(sq / n)) - std::exp(cs / n) + a + std::numbers::e;
}

inline double levy(const Point& x) {
  const auto d = x.size();
  auto w = [&](Eigen::Index i) { return 1.0 + (x[i] - 1.0) / 4.0; };
  const double pi = std::numbers::pi;
  const double w0 = w(0), wd = w(d - 1);
  double s = std::pow(std::sin(pi * w0), 2);
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    const double wi = w(i);
    s += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * std::pow(std::sin(pi * wi + 1.0), 2));
  }
  s += (wd - 1.0) * (wd - 1.0) * (1.0 + std::pow(std::sin(2.0 * pi * wd), 2));
  return s;
}

}  // namespace detail

inline Benchmark make_hartmann6() {
  Point xmin(6);
  xmin << 0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573;
  return {"hartmann6", 6, Bounds::cube(6, 0.0, 1.0), -3.32237, xmin, detail::hartmann6};
}

inline Benchmark make_ackley(std::size_t d = 8) {
  return {"ackley" + std::to_string(d), d, Bounds::cube(d, -5.0, 5.0), 0.0,
          Point::Zero(static_cast<Eigen::Index>(d)), detail::ackley};
}

inline Benchmark make_levy(std::size_t d = 10) {
  return {"levy" + std::to_string(d), d, Bounds::cube(d, -10.0, 10.0), 0.0,
          Point::Ones(static_cast<Eigen::Index>(d)), detail::levy};
}

inline std::vector<std::string> benchmark_names() { return {"hartmann6", "ackley8", "levy10"}; }

inline Benchmark benchmark_by_name(std::string_view name) {
  if (name == "hartmann6") return make_hartmann6();
  if (name == "ackley8") return make_ackley(8);
  if (name == "levy10") return make_levy(10);
  throw InvalidInput("unknown benchmark '" + std::string(name) + "'");
}

inline double evaluate(const Benchmark& b, const Point& x) {
  if (static_cast<std::size_t>(x.size()) != b.dim) throw InvalidInput(b.name + ": dimension mismatch");
  if (!b.bounds.contains(x)) throw InvalidInput(b.name + ": point outside bounds");
  return b.fn(x);
}

/// Latin hypercube design: one jittered sample per 1/n stratum in every
/// coordinate, strata permuted independently per dimension.
inline std::vector<Point> lhs_points(const Bounds& b, std::size_t n, RngStream& rng) {
  if (n < 1) throw InvalidInput("lhs: n must be >= 1");
  const std::size_t d = b.dim();
  std::vector<Point> u(n, Point(static_cast<Eigen::Index>(d)));
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    for (std::size_t i = 0; i < n; ++i)
      u[i][static_cast<Eigen::Index>(j)] = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
  }
  std::vector<Point> out;
  out.reserve(n);
  for (auto& p : u) out.push_back(clip_to_bounds(b.from_unit(p), b));
  return out;
}

struct InitialDesign {
  std::vector<Point> points;
  std::vector<double> values;  // raw objective values
};

inline InitialDesign lhs_design(const Benchmark& bm, std::size_t n, RngStream& rng) {
  InitialDesign out;
  out.points = lhs_points(bm.bounds, n, rng);
  for (const auto& p : out.points) out.values.push_back(evaluate(bm, p));
  return out;
}

inline Dataset lhs_init(const Benchmark& bm, std::size_t n, RngStream& rng) {
  auto design = lhs_design(bm, n, rng);
  return Dataset::from_raw(std::move(design.points), design.values);
}

inline double add_noise(double y, double scale, RngStream& rng) {
  if (!(scale >= 0.0)) throw InvalidInput("add_noise: scale must be >= 0");
  if (scale == 0.0) return y;
  return y + scale * rng.normal();
}

}  // namespace bocl
