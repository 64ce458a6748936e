#pragma once

#include <stdexcept>
#include <string>

namespace qplyap {

/// Argument outside the domain of an operation (e.g. a height outside the strip).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Malformed configuration or parameter object.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input violating a structural hypothesis, e.g. a constant sampling function.
struct DegenerateInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A certified search ran out of refinement budget without a positive bound.
struct SearchFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Coupling at or below the certified threshold.
struct OutOfRegime : std::runtime_error {
  OutOfRegime(const std::string& what, double threshold)
      : std::runtime_error(what), lambda0(threshold) {}
  double lambda0;
};

}  // namespace qplyap
