#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>

namespace bocl {

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Counter-based random stream.
///
/// Draw k of a stream is a pure function of (key, k), so a stream can be
/// copied, replayed, and split into labelled substreams without any
/// consumer perturbing another. All distributions are implemented here
/// rather than through <random> so sequences do not depend on the
/// standard library vendor.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) noexcept : key_(detail::mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Independent stream derived from this stream's key and a label. Does not
  /// advance this stream.
  RngStream substream(std::string_view label) const noexcept {
    return from_key(detail::mix64(key_ ^ detail::mix64(detail::fnv1a(label))));
  }

  RngStream substream(std::uint64_t index) const noexcept {
    return from_key(detail::mix64(key_ + detail::mix64(index ^ 0xd1b54a32d192ed03ULL)));
  }

  RngStream substream(std::string_view label, std::uint64_t index) const noexcept {
    return substream(label).substream(index);
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t c = counter_++;
    return detail::mix64(detail::mix64(key_ ^ c) + c);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  /// Standard normal via Box-Muller (one value per pair of uniforms).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  template <typename T>
  void shuffle(std::span<T> v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static RngStream from_key(std::uint64_t key) noexcept {
    RngStream r;
    r.key_ = key;
    return r;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bocl
