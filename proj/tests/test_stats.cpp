#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bocl/rng.hpp"
#include "bocl/stats.hpp"

using namespace bocl;

namespace {

// Two-sided p by enumerating every sign assignment over the average ranks.
double brute_force_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  const int n = static_cast<int>(d.size());
  std::vector<double> absd;
  for (double x : d) absd.push_back(std::abs(x));
  std::vector<double> ranks(n);
  for (int i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (int j = 0; j < n; ++j) {
      less += absd[j] < absd[i];
      equal += absd[j] == absd[i];
    }
    ranks[i] = less + (equal + 1) / 2;
  }
  double total = 0, wp = 0;
  for (int i = 0; i < n; ++i) {
    total += ranks[i];
    if (d[i] > 0) wp += ranks[i];
  }
  const double w = std::min(wp, total - wp);
  long long count = 0;
  for (long long mask = 0; mask < (1LL << n); ++mask) {
    double s = 0;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) s += ranks[i];
    if (s <= w + 1e-9) ++count;
  }
  return std::min(1.0, 2.0 * static_cast<double>(count) / std::ldexp(1.0, n));
}

}  // namespace

TEST(Wilcoxon, FiveAllPositive) {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{0, 0, 0, 0, 0};
  const auto r = wilcoxon_signed_rank(a, b);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.n_pairs, 5);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 0.0625);
}

TEST(Wilcoxon, NullCase) {
  std::vector<double> a, b;
  for (int i = 0; i < 20; ++i) {
    b.push_back(i * 0.37);
    a.push_back(b.back() + (i % 2 ? 1e-9 : -1e-9) * (1 + 0.01 * i));
  }
  EXPECT_GT(wilcoxon_signed_rank(a, b).p_value, 0.8);
}

TEST(Wilcoxon, ErrorsAndDropsZeros) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  EXPECT_THROW(wilcoxon_signed_rank(a, a), UndefinedResult);
  const std::vector<double> s{1, 2, 3, 4};
  EXPECT_THROW(wilcoxon_signed_rank(s, s), InvalidInput);
  const std::vector<double> c{1, 2, 3, 4, 6};
  EXPECT_THROW(wilcoxon_signed_rank(a, s), InvalidInput);
  const auto r = wilcoxon_signed_rank(c, a);
  EXPECT_EQ(r.n_pairs, 1);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(Wilcoxon, ExactMatchesEnumerationOnCorpus) {
  RngStream rng(1);
  int cases = 0;
  for (int n = 5; n <= 12; ++n)
    for (int rep = 0; rep < 25; ++rep) {
      std::vector<double> a, b;
      const double shift = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < n; ++i) {
        // Rounded values produce tied magnitudes and zero differences.
        a.push_back(std::round(rng.normal(shift, 1.0) * 4) / 4);
        b.push_back(std::round(rng.normal(0.0, 1.0) * 4) / 4);
      }
      bool any = false;
      for (int i = 0; i < n; ++i) any |= a[i] != b[i];
      std::size_t nonzero = 0;
      for (int i = 0; i < n; ++i) nonzero += a[i] != b[i];
      if (!any || nonzero < 1) continue;
      const auto r = wilcoxon_signed_rank(a, b);
      EXPECT_TRUE(r.exact);
      EXPECT_NEAR(r.p_value, brute_force_p(a, b), 1e-12) << "n=" << n << " rep=" << rep;
      ++cases;
    }
  EXPECT_GE(cases, 190);
}

TEST(Wilcoxon, NormalApproximationCloseToExact) {
  RngStream rng(2);
  std::vector<double> a, b;
  for (int i = 0; i < 20; ++i) {
    b.push_back(rng.normal());
    a.push_back(b.back() + rng.normal(0.4, 1.0));
  }
  const std::vector<double> a12(a.begin(), a.begin() + 12), b12(b.begin(), b.begin() + 12);
  const auto ex = wilcoxon_signed_rank(a12, b12, WilcoxonMethod::Exact);
  const auto ap = wilcoxon_signed_rank(a12, b12, WilcoxonMethod::Normal);
  EXPECT_TRUE(ex.exact);
  EXPECT_FALSE(ap.exact);
  EXPECT_NEAR(ap.p_value, ex.p_value, 0.02);
  const auto full = wilcoxon_signed_rank(a, b);
  EXPECT_FALSE(full.exact);
  EXPECT_NEAR(full.p_value, wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact).p_value, 0.02);
}

TEST(Wilcoxon, PMonotoneInStatistic) {
  // Moving more of the mass to positive differences lowers min(W+, W-) and p.
  double prev_p = 0, prev_w = 1e9;
  for (int k = 5; k <= 10; ++k) {
    std::vector<double> a, b(10, 0.0);
    for (int i = 0; i < 10; ++i) a.push_back((i >= 10 - k ? 1.0 : -1.0) * (i + 1));
    const auto r = wilcoxon_signed_rank(a, b);
    if (k > 5) {
      EXPECT_LE(r.statistic, prev_w);
      EXPECT_LE(r.p_value, prev_p);
    }
    prev_p = r.p_value;
    prev_w = r.statistic;
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
}

TEST(AverageRanks, Ties) {
  const std::vector<double> v{3, 1, 3, 2};
  const auto r = average_ranks(v);
  EXPECT_EQ(r, (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(MeanStd, PermutationInvariant) {
  std::vector<double> v{0.1, 1e8, -3.3, 7.25, 1e-7, 42};
  const auto a = mean_std(v);
  std::reverse(v.begin(), v.end());
  const auto b = mean_std(v);
  std::rotate(v.begin(), v.begin() + 2, v.end());
  const auto c = mean_std(v);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std, b.std);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.std, c.std);
  const std::vector<double> two{1, 3};
  EXPECT_DOUBLE_EQ(mean_std(two).std, std::sqrt(2.0));
}
