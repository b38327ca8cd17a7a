#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bocl/errors.hpp"

namespace bocl {

/// A location in the search domain, in problem units.
using Point = Eigen::VectorXd;

inline void require_same_dim(const Point& a, const Point& b, const char* where) {
  if (a.size() != b.size()) {
    throw InvalidInput(std::string(where) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + ")");
  }
}

inline void require_finite(const Point& x, const char* where) {
  if (!x.allFinite()) throw InvalidInput(std::string(where) + ": non-finite coordinate");
}

/// Axis-aligned box with lower[i] < upper[i].
class Bounds {
 public:
  Bounds(Point lower, Point upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() == 0) throw InvalidInput("Bounds: zero dimension");
    require_same_dim(lower_, upper_, "Bounds");
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
      if (!(lower_[i] < upper_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i]))
        throw InvalidInput("Bounds: require finite lower[i] < upper[i] at index " + std::to_string(i));
    }
  }

  static Bounds cube(std::size_t d, double lo, double hi) {
    return Bounds(Point::Constant(static_cast<Eigen::Index>(d), lo), Point::Constant(static_cast<Eigen::Index>(d), hi));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.size()); }
  const Point& lower() const noexcept { return lower_; }
  const Point& upper() const noexcept { return upper_; }
  Point width() const { return upper_ - lower_; }

  bool contains(const Point& x) const {
    if (x.size() != lower_.size()) return false;
    return (x.array() >= lower_.array()).all() && (x.array() <= upper_.array()).all();
  }

  /// Affine map from the unit cube.
  Point from_unit(const Point& u) const {
    require_same_dim(u, lower_, "Bounds::from_unit");
    return lower_ + (upper_ - lower_).cwiseProduct(u);
  }

  Point to_unit(const Point& x) const {
    require_same_dim(x, lower_, "Bounds::to_unit");
    return (x - lower_).cwiseQuotient(upper_ - lower_);
  }

 private:
  Point lower_;
  Point upper_;
};

inline Point clip_to_bounds(const Point& x, const Bounds& b) {
  require_same_dim(x, b.lower(), "clip_to_bounds");
  return x.cwiseMax(b.lower()).cwiseMin(b.upper());
}

struct NormalizedTargets {
  std::vector<double> values;
  double y_mean = 0.0;
  double y_std = 1.0;
};

/// Standardize with the population (1/n) standard deviation. A constant or
/// single-element input is only centred and reports y_std = 1.
inline NormalizedTargets normalize_targets(std::span<const double> raw) {
  if (raw.empty()) throw InvalidInput("normalize_targets: empty input");
  for (double v : raw)
    if (!std::isfinite(v)) throw InvalidInput("normalize_targets: non-finite target");
  const double n = static_cast<double>(raw.size());
  double mean = 0.0;
  for (double v : raw) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : raw) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / n);
  if (!(sd > 0.0) || raw.size() < 2) sd = 1.0;
  NormalizedTargets out{{}, mean, sd};
  out.values.reserve(raw.size());
  for (double v : raw) out.values.push_back((v - mean) / sd);
  return out;
}

inline std::vector<double> denormalize_targets(std::span<const double> normalized, double y_mean, double y_std) {
  std::vector<double> out;
  out.reserve(normalized.size());
  for (double v : normalized) out.push_back(v * y_std + y_mean);
  return out;
}

/// Design points with targets in normalized units plus the affine map back
/// to raw units. Appending a pseudo-observation keeps the map frozen.
class Dataset {
 public:
  Dataset() = default;

  static Dataset from_raw(std::vector<Point> points, std::span<const double> raw_targets) {
    auto norm = normalize_targets(raw_targets);
    return Dataset(std::move(points), std::move(norm.values), norm.y_mean, norm.y_std);
  }

  /// Targets already normalized by (y_mean, y_std).
  Dataset(std::vector<Point> points, std::vector<double> targets, double y_mean = 0.0, double y_std = 1.0)
      : points_(std::move(points)), targets_(std::move(targets)), y_mean_(y_mean), y_std_(y_std) {
    if (points_.empty()) throw InvalidInput("Dataset: need at least one point");
    if (points_.size() != targets_.size()) throw InvalidInput("Dataset: points/targets length mismatch");
    if (!(y_std_ > 0.0)) throw InvalidInput("Dataset: y_std must be positive");
    const auto d = points_.front().size();
    if (d == 0) throw InvalidInput("Dataset: zero-dimensional points");
    for (const auto& p : points_) {
      if (p.size() != d) throw InvalidInput("Dataset: points do not share a dimension");
      require_finite(p, "Dataset");
    }
    for (double t : targets_)
      if (!std::isfinite(t)) throw InvalidInput("Dataset: non-finite target");
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dim() const noexcept { return points_.empty() ? 0 : static_cast<std::size_t>(points_.front().size()); }
  const std::vector<Point>& points() const noexcept { return points_; }
  const std::vector<double>& targets() const noexcept { return targets_; }
  double y_mean() const noexcept { return y_mean_; }
  double y_std() const noexcept { return y_std_; }

  double to_normalized(double raw) const noexcept { return (raw - y_mean_) / y_std_; }
  double to_raw(double normalized) const noexcept { return normalized * y_std_ + y_mean_; }
  std::vector<double> raw_targets() const { return denormalize_targets(targets_, y_mean_, y_std_); }

  double min_target() const { return *std::min_element(targets_.begin(), targets_.end()); }
  double max_target() const { return *std::max_element(targets_.begin(), targets_.end()); }
  double mean_target() const {
    double s = 0.0;
    for (double t : targets_) s += t;
    return s / static_cast<double>(targets_.size());
  }

  Dataset augmented(const Point& x, double y_normalized) const {
    Dataset out = *this;
    out.append(x, y_normalized);
    return out;
  }

  void append(const Point& x, double y_normalized) {
    if (static_cast<std::size_t>(x.size()) != dim()) throw InvalidInput("Dataset::append: dimension mismatch");
    require_finite(x, "Dataset::append");
    if (!std::isfinite(y_normalized)) throw InvalidInput("Dataset::append: non-finite target");
    points_.push_back(x);
    targets_.push_back(y_normalized);
  }

 private:
  std::vector<Point> points_;
  std::vector<double> targets_;
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
};

/// Symmetric matrix of Euclidean distances.
inline Eigen::MatrixXd pairwise_distances(std::span<const Point> points) {
  if (points.size() < 2) throw InvalidInput("pairwise_distances: need at least two points");
  const auto n = static_cast<Eigen::Index>(points.size());
  for (const auto& p : points) require_same_dim(p, points.front(), "pairwise_distances");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (points[i] - points[j]).norm();
  return d;
}

struct DistanceSummary {
  double min = 0.0;
  double mean = 0.0;
};

/// Min and mean over distinct pairs. A single point reports zeros.
inline DistanceSummary distance_summary(std::span<const Point> points) {
  if (points.size() < 2) return {};
  const auto d = pairwise_distances(points);
  double mn = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
      mn = std::min(mn, d(i, j));
      sum += d(i, j);
      ++pairs;
    }
  return {mn, sum / static_cast<double>(pairs)};
}

}  // namespace bocl
