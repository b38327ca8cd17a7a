#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"
#include "bocl/rng.hpp"
#include "bocl/surrogate.hpp"

namespace bocl {

inline constexpr double kRbfRegularization = 1e-4;

/// Normalized multiquadric, phi(0) = 1.
inline double multiquadric(double r, double epsilon) { return std::sqrt(1.0 + (r * r) / (epsilon * epsilon)); }

inline double median_pairwise_distance(std::span<const Point> points) {
  if (points.size() < 2) throw InvalidInput("median_pairwise_distance: need at least two points");
  std::vector<double> d;
  d.reserve(points.size() * (points.size() - 1) / 2);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) d.push_back((points[i] - points[j]).norm());
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size() / 2;
  return d.size() % 2 == 1 ? d[m] : 0.5 * (d[m - 1] + d[m]);
}

/// Multiquadric interpolant with one center per training input.
///
/// The power function |1 - phi(x)^T (Phi + reg I)^{-1} phi(x)| serves as
/// the predictive variance. Phi is indefinite, so the system is factored with
/// partial-pivot LU rather than Cholesky.
class RbfModel {
 public:
  /// Fit with epsilon set to the median pairwise distance of the inputs.
  static RbfModel fit(const Dataset& data, double regularization = kRbfRegularization) {
    if (data.size() < 2) throw InvalidInput("rbf_fit: need at least two observations");
    return build(data, median_pairwise_distance(data.points()), regularization);
  }

  /// Solve for weights with a fixed spread.
  static RbfModel build(Dataset data, double epsilon, double regularization = kRbfRegularization) {
    if (!(epsilon > 0.0)) throw InvalidInput("RbfModel: epsilon must be positive");
    if (!(regularization >= 0.0)) throw InvalidInput("RbfModel: negative regularization");
    const auto& P = data.points();
    for (std::size_t i = 0; i < P.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if ((P[i] - P[j]).squaredNorm() == 0.0) throw InvalidInput("RbfModel: coincident centers");
    RbfModel m;
    m.epsilon_ = epsilon;
    m.reg_ = regularization;
    m.data_ = std::move(data);
    const auto& X = m.data_.points();
    const auto n = static_cast<Eigen::Index>(m.data_.size());
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      A(i, i) = 1.0 + regularization;
      for (Eigen::Index j = 0; j < i; ++j) A(i, j) = A(j, i) = multiquadric((X[i] - X[j]).norm(), epsilon);
    }
    m.lu_.compute(A);
    if (!(m.lu_.rcond() > 1e-15)) throw NumericalFailure("RbfModel: interpolation system is singular");
    const Eigen::Map<const Eigen::VectorXd> y(m.data_.targets().data(), n);
    m.weights_ = m.lu_.solve(y);
    if (!m.weights_.allFinite()) throw NumericalFailure("RbfModel: non-finite weights");
    return m;
  }

  const std::vector<Point>& centers() const noexcept { return data_.points(); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double epsilon() const noexcept { return epsilon_; }
  double regularization() const noexcept { return reg_; }
  const Dataset& data() const noexcept { return data_; }
  std::size_t size() const noexcept { return data_.size(); }
  Eigen::MatrixXd system_matrix() const { return lu_.reconstructedMatrix(); }

  Eigen::VectorXd basis_vector(const Point& x) const {
    const auto& C = data_.points();
    if (static_cast<std::size_t>(x.size()) != data_.dim()) throw InvalidInput("RbfModel: dimension mismatch");
    Eigen::VectorXd phi(static_cast<Eigen::Index>(C.size()));
    for (std::size_t i = 0; i < C.size(); ++i) phi[static_cast<Eigen::Index>(i)] = multiquadric((x - C[i]).norm(), epsilon_);
    return phi;
  }

  PosteriorMoments predict(const Point& x) const {
    const Eigen::VectorXd phi = basis_vector(x);
    const double quad = phi.dot(lu_.solve(phi));
    return {phi.dot(weights_), std::abs(1.0 - quad)};
  }

  /// Re-solve with (x_star, y_tilde) added as a new center; epsilon is kept.
  RbfModel condition(const Point& x_star, double y_tilde) const {
    if (static_cast<std::size_t>(x_star.size()) != data_.dim()) throw InvalidInput("rbf_condition: dimension mismatch");
    for (const auto& c : data_.points())
      if ((c - x_star).squaredNorm() == 0.0) throw InvalidInput("rbf_condition: point coincides with an existing center");
    return build(data_.augmented(x_star, y_tilde), epsilon_, reg_);
  }

  RbfModel condition(const Point& x_star, double y_tilde, RngStream&) const { return condition(x_star, y_tilde); }

 private:
  Dataset data_;
  double epsilon_ = 1.0;
  double reg_ = kRbfRegularization;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd weights_;
};

static_assert(ConditioningSurrogate<RbfModel>);

}  // namespace bocl
