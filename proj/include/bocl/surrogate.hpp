#pragma once

#include <cmath>
#include <concepts>

#include "bocl/core_types.hpp"
#include "bocl/rng.hpp"

namespace bocl {

/// Predictive mean and variance, both in normalized target units.
struct PosteriorMoments {
  double mean = 0.0;
  double variance = 0.0;

  double sd() const noexcept { return std::sqrt(variance > 0.0 ? variance : 0.0); }
};

/// A model that predicts (mean, variance) and can absorb one more
/// observation, returning a new model value. The rng is only consumed by
/// surrogates whose update involves randomness (retrained ensembles).
template <typename S>
concept ConditioningSurrogate = std::copy_constructible<S> && requires(const S& s, const Point& x, double y, RngStream& rng) {
  { s.predict(x) } -> std::convertible_to<PosteriorMoments>;
  { s.condition(x, y, rng) } -> std::convertible_to<S>;
};

/// Observation-noise variance a surrogate adds to its predictive variance
/// when sampling a fantasy value. Zero unless the model declares one.
template <typename S>
double observation_noise_variance(const S& s) {
  if constexpr (requires { { s.noise_variance() } -> std::convertible_to<double>; })
    return s.noise_variance();
  else
    return 0.0;
}

}  // namespace bocl
