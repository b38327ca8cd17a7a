#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "bocl/errors.hpp"

namespace bocl {

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double p_value = 1.0;    // two-sided
  int n_pairs = 0;         // after dropping zero differences
  bool exact = false;
};

/// Average ranks (1-based) of v, ties share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline constexpr int kWilcoxonExactMax = 12;

enum class WilcoxonMethod { Auto, Exact, Normal };

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped. Exact null distribution for up to 12 nonzero pairs (ties
/// handled by counting over doubled average ranks), otherwise the normal
/// approximation with continuity and tie corrections. The method can be forced
/// for cross-checking.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                           WilcoxonMethod method = WilcoxonMethod::Auto) {
  if (a.size() != b.size()) throw InvalidInput("wilcoxon: samples differ in length");
  if (a.size() < 5) throw InvalidInput("wilcoxon: need at least 5 pairs");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double di = a[i] - b[i];
    if (!std::isfinite(di)) throw InvalidInput("wilcoxon: non-finite difference");
    if (di != 0.0) d.push_back(di);
  }
  if (d.empty()) throw UndefinedResult("wilcoxon: all differences are zero");
  const int n = static_cast<int>(d.size());
  std::vector<double> absd(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) absd[i] = std::abs(d[i]);
  const auto ranks = average_ranks(absd);

  double w_plus = 0.0, total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total += ranks[i];
    if (d[i] > 0.0) w_plus += ranks[i];
  }
  WilcoxonResult r;
  r.n_pairs = n;
  r.statistic = std::min(w_plus, total - w_plus);

  const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && n <= kWilcoxonExactMax);
  if (exact) {
    if (n > 60) throw InvalidInput("wilcoxon: exact distribution limited to 60 pairs");
    // Doubled ranks are integers; count sign assignments by their W+ sum.
    std::vector<int> dr(d.size());
    int dsum = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      dr[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      dsum += dr[i];
    }
    std::vector<double> count(static_cast<std::size_t>(dsum) + 1, 0.0);
    count[0] = 1.0;
    for (int v : dr)
      for (int s = dsum; s >= v; --s) count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - v)];
    const int w2 = static_cast<int>(std::lround(2.0 * r.statistic));
    double tail = 0.0;
    for (int s = 0; s <= w2; ++s) tail += count[static_cast<std::size_t>(s)];
    r.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, n));
    r.exact = true;
    return r;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  std::vector<double> sorted = absd;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  std::size_t n = 0;
};

/// Values are sorted first so the result does not depend on input order.
inline MeanStd mean_std(std::span<const double> v) {
  MeanStd out;
  out.n = v.size();
  if (v.empty()) return out;
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  double sum = 0.0;
  for (double x : s) sum += x;
  out.mean = sum / static_cast<double>(s.size());
  if (s.size() > 1) {
    double ss = 0.0;
    for (double x : s) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(s.size() - 1));
  }
  return out;
}

}  // namespace bocl
