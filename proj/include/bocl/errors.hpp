#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bocl {

// Bad arguments: dimension mismatches, empty inputs, out-of-range values.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A factorization or solve failed. Carries the jitter levels that were tried.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what, std::vector<double> jitter = {})
      : std::runtime_error(what), attempted_jitter_(std::move(jitter)) {}

  const std::vector<double>& attempted_jitter() const noexcept { return attempted_jitter_; }

 private:
  std::vector<double> attempted_jitter_;
};

// A quantity that is mathematically undefined for the given input
// (e.g. a ratio with a vanishing denominator, a test with no nonzero pairs).
class UndefinedResult : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace bocl
