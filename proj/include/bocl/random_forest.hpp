#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "bocl/core_types.hpp"
#include "bocl/errors.hpp"
#include "bocl/rng.hpp"
#include "bocl/surrogate.hpp"

namespace bocl {

struct ForestConfig {
  int trees = 200;
  int min_leaf = 2;
};

/// CART regression tree over axis-aligned splits (x[feature] <= threshold
/// goes left). Leaves store the mean of the bootstrap targets that reach them.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int count = 0;
  };

  static RegressionTree grow(const Dataset& data, std::vector<std::size_t> sample, int min_leaf) {
    RegressionTree t;
    t.sample_ = std::move(sample);
    std::vector<std::size_t> idx = t.sample_;
    t.build(data, idx, 0, idx.size(), min_leaf);
    return t;
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<std::size_t>& bootstrap_indices() const noexcept { return sample_; }

  int leaf_of(const Point& x) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& nd = nodes_[static_cast<std::size_t>(i)];
      i = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return i;
  }

  double predict(const Point& x) const { return nodes_[static_cast<std::size_t>(leaf_of(x))].value; }

 private:
  // Builds the subtree over idx[begin, end), returns its node index.
  int build(const Dataset& data, std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, int min_leaf) {
    const auto& X = data.points();
    const auto& y = data.targets();
    const std::size_t m = end - begin;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      sum += y[idx[k]];
      sumsq += y[idx[k]] * y[idx[k]];
    }
    const double mean = sum / static_cast<double>(m);
    nodes_[static_cast<std::size_t>(self)].value = mean;
    nodes_[static_cast<std::size_t>(self)].count = static_cast<int>(m);
    const double sse = sumsq - sum * sum / static_cast<double>(m);
    const auto ml = static_cast<std::size_t>(min_leaf);
    if (m < 2 * ml || sse <= 1e-14 * std::max(1.0, sumsq)) return self;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_sse = sse;
    std::vector<std::size_t> order(idx.begin() + static_cast<std::ptrdiff_t>(begin), idx.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t f = 0; f < data.dim(); ++f) {
      const auto fe = static_cast<Eigen::Index>(f);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return X[a][fe] < X[b][fe]; });
      double ls = 0.0, lss = 0.0;
      for (std::size_t k = 0; k + 1 < m; ++k) {
        const double v = y[order[k]];
        ls += v;
        lss += v * v;
        const std::size_t nl = k + 1, nr = m - nl;
        if (nl < ml || nr < ml) continue;
        const double xa = X[order[k]][fe], xb = X[order[k + 1]][fe];
        if (!(xa < xb)) continue;
        const double rs = sum - ls, rss = sumsq - lss;
        const double cand = (lss - ls * ls / static_cast<double>(nl)) + (rss - rs * rs / static_cast<double>(nr));
        if (cand < best_sse - 1e-12 * std::max(1.0, sse)) {
          best_sse = cand;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (xa + xb);
        }
      }
    }
    if (best_feature < 0) return self;

    const auto fe = static_cast<Eigen::Index>(best_feature);
    const auto mid = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                           idx.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t i) { return X[i][fe] <= best_threshold; });
    const auto split = static_cast<std::size_t>(mid - idx.begin());
    nodes_[static_cast<std::size_t>(self)].feature = best_feature;
    nodes_[static_cast<std::size_t>(self)].threshold = best_threshold;
    const int l = build(data, idx, begin, split, min_leaf);
    const int r = build(data, idx, split, end, min_leaf);
    nodes_[static_cast<std::size_t>(self)].left = l;
    nodes_[static_cast<std::size_t>(self)].right = r;
    return self;
  }

  std::vector<Node> nodes_;
  std::vector<std::size_t> sample_;
};

/// Bagged regression trees; (mu, sigma^2) are the mean and population
/// variance of the tree outputs. condition() is the identity unless
/// rebuilding is enabled, which regrows every tree on the augmented data
/// with fresh bootstrap draws.
class ForestModel {
 public:
  static ForestModel fit(const Dataset& data, RngStream& rng, const ForestConfig& cfg = {}, bool rebuild = false) {
    if (cfg.trees < 1 || cfg.min_leaf < 1) throw InvalidInput("forest_fit: invalid configuration");
    if (data.size() < static_cast<std::size_t>(2 * cfg.min_leaf))
      throw InvalidInput("forest_fit: need at least 2 * min_leaf observations");
    ForestModel f;
    f.data_ = data;
    f.cfg_ = cfg;
    f.rebuild_ = rebuild;
    const std::size_t n = data.size();
    f.trees_.reserve(static_cast<std::size_t>(cfg.trees));
    for (int t = 0; t < cfg.trees; ++t) {
      RngStream tr = rng.substream("rf-bootstrap", static_cast<std::uint64_t>(t));
      std::vector<std::size_t> sample(n);
      for (auto& s : sample) s = static_cast<std::size_t>(tr.uniform_index(n));
      f.trees_.push_back(RegressionTree::grow(data, std::move(sample), cfg.min_leaf));
    }
    return f;
  }

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  const Dataset& data() const noexcept { return data_; }
  const ForestConfig& config() const noexcept { return cfg_; }
  bool rebuilds() const noexcept { return rebuild_; }
  ForestModel with_rebuild(bool on) const {
    ForestModel f = *this;
    f.rebuild_ = on;
    return f;
  }

  PosteriorMoments predict(const Point& x) const {
    if (static_cast<std::size_t>(x.size()) != data_.dim()) throw InvalidInput("forest_predict: dimension mismatch");
    const double k = static_cast<double>(trees_.size());
    double mean = 0.0;
    for (const auto& t : trees_) mean += t.predict(x);
    mean /= k;
    double var = 0.0;
    for (const auto& t : trees_) {
      const double d = t.predict(x) - mean;
      var += d * d;
    }
    return {mean, var / k};
  }

  ForestModel condition(const Point& x_star, double y_tilde, RngStream& rng) const {
    if (static_cast<std::size_t>(x_star.size()) != data_.dim()) throw InvalidInput("forest_condition: dimension mismatch");
    if (!rebuild_) return *this;
    RngStream fresh(rng.next_u64());
    return fit(data_.augmented(x_star, y_tilde), fresh, cfg_, true);
  }

 private:
  std::vector<RegressionTree> trees_;
  Dataset data_;
  ForestConfig cfg_;
  bool rebuild_ = false;
};

static_assert(ConditioningSurrogate<ForestModel>);

inline ForestModel forest_condition(const ForestModel& f, const Point& x_star, double y_tilde, bool rebuild, RngStream& rng) {
  return f.with_rebuild(rebuild).condition(x_star, y_tilde, rng).with_rebuild(f.rebuilds());
}

}  // namespace bocl
