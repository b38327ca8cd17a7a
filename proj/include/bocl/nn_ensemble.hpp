#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"
#include "bocl/rng.hpp"
#include "bocl/surrogate.hpp"

namespace bocl {

struct NnTrainingConfig {
  int members = 10;
  int hidden = 64;
  int max_iterations = 2000;
  double initial_learning_rate = 0.01;
  double lr_growth = 1.1;     // on an accepted step
  double lr_shrink = 0.5;     // on a rejected step
  int patience = 50;          // early-stopping window in iterations
  double min_improvement = 1e-6;
};

/// Two-hidden-layer ReLU regressor trained by full-batch gradient descent.
struct MlpNetwork {
  Eigen::MatrixXd W1, W2;
  Eigen::VectorXd b1, b2, w3;
  double b3 = 0.0;

  double predict(const Point& x) const {
    const Eigen::VectorXd h1 = (W1 * x + b1).cwiseMax(0.0);
    const Eigen::VectorXd h2 = (W2 * h1 + b2).cwiseMax(0.0);
    return w3.dot(h2) + b3;
  }

  // Columns of X are samples.
  Eigen::RowVectorXd predict_batch(const Eigen::MatrixXd& X) const {
    const Eigen::MatrixXd h1 = ((W1 * X).colwise() + b1).cwiseMax(0.0);
    const Eigen::MatrixXd h2 = ((W2 * h1).colwise() + b2).cwiseMax(0.0);
    return (w3.transpose() * h2).array() + b3;
  }
};

namespace detail {

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline MlpNetwork init_network(std::size_t d, int hidden, RngStream& rng) {
  MlpNetwork net;
  auto fill = [&](Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
    const double a = 1.0 / std::sqrt(static_cast<double>(cols));
    m.resize(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-a, a);
  };
  auto fill_vec = [&](Eigen::VectorXd& v, Eigen::Index len, Eigen::Index fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    v.resize(len);
    for (Eigen::Index i = 0; i < len; ++i) v[i] = rng.uniform(-a, a);
  };
  const auto di = static_cast<Eigen::Index>(d);
  fill(net.W1, hidden, di);
  fill_vec(net.b1, hidden, di);
  fill(net.W2, hidden, hidden);
  fill_vec(net.b2, hidden, hidden);
  fill_vec(net.w3, hidden, hidden);
  net.b3 = rng.uniform(-1.0 / std::sqrt(static_cast<double>(hidden)), 1.0 / std::sqrt(static_cast<double>(hidden)));
  return net;
}

struct MlpGradient {
  Eigen::MatrixXd W1, W2;
  Eigen::VectorXd b1, b2, w3;
  double b3 = 0.0;
};

// 0.5 * mean squared error and its gradient.
inline double mlp_loss(const MlpNetwork& net, const Eigen::MatrixXd& X, const Eigen::RowVectorXd& y, MlpGradient* grad) {
  const double n = static_cast<double>(X.cols());
  const Eigen::MatrixXd a1 = (net.W1 * X).colwise() + net.b1;
  const Eigen::MatrixXd h1 = a1.cwiseMax(0.0);
  const Eigen::MatrixXd a2 = (net.W2 * h1).colwise() + net.b2;
  const Eigen::MatrixXd h2 = a2.cwiseMax(0.0);
  const Eigen::RowVectorXd out = (net.w3.transpose() * h2).array() + net.b3;
  const Eigen::RowVectorXd r = out - y;
  const double loss = 0.5 * r.squaredNorm() / n;
  if (grad) {
    const Eigen::RowVectorXd dout = r / n;
    grad->w3 = h2 * dout.transpose();
    grad->b3 = dout.sum();
    const Eigen::MatrixXd d2 = (net.w3 * dout).cwiseProduct((a2.array() > 0.0).cast<double>().matrix());
    grad->W2 = d2 * h1.transpose();
    grad->b2 = d2.rowwise().sum();
    const Eigen::MatrixXd d1 = (net.W2.transpose() * d2).cwiseProduct((a1.array() > 0.0).cast<double>().matrix());
    grad->W1 = d1 * X.transpose();
    grad->b1 = d1.rowwise().sum();
  }
  return loss;
}

inline MlpNetwork step(const MlpNetwork& net, const MlpGradient& g, double lr) {
  MlpNetwork out = net;
  out.W1 -= lr * g.W1;
  out.b1 -= lr * g.b1;
  out.W2 -= lr * g.W2;
  out.b2 -= lr * g.b2;
  out.w3 -= lr * g.w3;
  out.b3 -= lr * g.b3;
  return out;
}

struct TrainOutcome {
  MlpNetwork net;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;
};

// Full-batch gradient descent; the step grows after an accepted update and is
// halved (update rejected) when the loss would increase.
inline TrainOutcome train_network(MlpNetwork net, const Eigen::MatrixXd& X, const Eigen::RowVectorXd& y,
                                  const NnTrainingConfig& cfg) {
  MlpGradient g;
  double loss = mlp_loss(net, X, y, &g);
  TrainOutcome out;
  out.initial_loss = loss;
  if (!std::isfinite(loss)) throw NumericalFailure("nn_fit: non-finite initial loss");
  double lr = cfg.initial_learning_rate;
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(cfg.max_iterations) + 1);
  history.push_back(loss);
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    MlpNetwork trial = step(net, g, lr);
    MlpGradient g_trial;
    const double trial_loss = mlp_loss(trial, X, y, &g_trial);
    if (std::isnan(trial_loss)) throw NumericalFailure("nn_fit: loss diverged to NaN");
    if (trial_loss < loss) {
      net = std::move(trial);
      g = std::move(g_trial);
      loss = trial_loss;
      lr *= cfg.lr_growth;
    } else {
      lr *= cfg.lr_shrink;
      if (lr < 1e-300) break;
    }
    history.push_back(loss);
    const auto h = history.size();
    if (h > static_cast<std::size_t>(cfg.patience) &&
        history[h - 1 - static_cast<std::size_t>(cfg.patience)] - loss < cfg.min_improvement)
      break;
  }
  out.net = std::move(net);
  out.final_loss = loss;
  out.iterations = it;
  return out;
}

}  // namespace detail

/// Ensemble of independently initialized networks. Mean and population
/// variance across members give (mu, sigma^2).
///
/// condition() leaves the model untouched unless retraining is enabled, in
/// which case every member is refit from new seeds on the augmented data.
class NnEnsemble {
 public:
  static NnEnsemble fit(const Dataset& data, RngStream& rng, const NnTrainingConfig& cfg = {}, bool retrain = false) {
    if (data.size() < 4) throw InvalidInput("nn_fit: need at least four observations");
    if (cfg.members < 1) throw InvalidInput("nn_fit: need at least one member");
    NnEnsemble e;
    e.data_ = data;
    e.cfg_ = cfg;
    e.retrain_ = retrain;
    const auto n = static_cast<Eigen::Index>(data.size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(data.dim()), n);
    for (Eigen::Index i = 0; i < n; ++i) X.col(i) = data.points()[static_cast<std::size_t>(i)];
    const Eigen::RowVectorXd y = Eigen::Map<const Eigen::RowVectorXd>(data.targets().data(), n);
    for (int m = 0; m < cfg.members; ++m) {
      RngStream member_rng = rng.substream("nn-init", static_cast<std::uint64_t>(m));
      auto outcome = detail::train_network(detail::init_network(data.dim(), cfg.hidden, member_rng), X, y, cfg);
      e.initial_loss_.push_back(outcome.initial_loss);
      e.final_loss_.push_back(outcome.final_loss);
      e.members_.push_back(std::move(outcome.net));
    }
    return e;
  }

  /// Ensemble from explicit members (for tests and analysis).
  static NnEnsemble from_members(std::vector<MlpNetwork> members, Dataset data) {
    if (members.empty()) throw InvalidInput("NnEnsemble: no members");
    NnEnsemble e;
    e.members_ = std::move(members);
    e.data_ = std::move(data);
    return e;
  }

  const std::vector<MlpNetwork>& members() const noexcept { return members_; }
  const Dataset& data() const noexcept { return data_; }
  const std::vector<double>& initial_losses() const noexcept { return initial_loss_; }
  const std::vector<double>& final_losses() const noexcept { return final_loss_; }
  bool retrains() const noexcept { return retrain_; }
  NnEnsemble with_retraining(bool on) const {
    NnEnsemble e = *this;
    e.retrain_ = on;
    return e;
  }

  std::vector<double> member_predictions(const Point& x) const {
    if (static_cast<std::size_t>(x.size()) != data_.dim()) throw InvalidInput("nn_predict: dimension mismatch");
    std::vector<double> out;
    out.reserve(members_.size());
    for (const auto& m : members_) out.push_back(m.predict(x));
    return out;
  }

  PosteriorMoments predict(const Point& x) const {
    const auto p = member_predictions(x);
    const double k = static_cast<double>(p.size());
    double mean = 0.0;
    for (double v : p) mean += v;
    mean /= k;
    double var = 0.0;
    for (double v : p) var += (v - mean) * (v - mean);
    return {mean, var / k};
  }

  NnEnsemble condition(const Point& x_star, double y_tilde, RngStream& rng) const {
    if (static_cast<std::size_t>(x_star.size()) != data_.dim()) throw InvalidInput("nn_condition: dimension mismatch");
    if (!retrain_) return *this;
    RngStream fresh(rng.next_u64());
    return fit(data_.augmented(x_star, y_tilde), fresh, cfg_, true);
  }

 private:
  std::vector<MlpNetwork> members_;
  Dataset data_;
  NnTrainingConfig cfg_;
  bool retrain_ = false;
  std::vector<double> initial_loss_, final_loss_;
};

static_assert(ConditioningSurrogate<NnEnsemble>);

inline NnEnsemble nn_condition(const NnEnsemble& e, const Point& x_star, double y_tilde, bool retrain, RngStream& rng) {
  return e.with_retraining(retrain).condition(x_star, y_tilde, rng).with_retraining(e.retrains());
}

}  // namespace bocl
