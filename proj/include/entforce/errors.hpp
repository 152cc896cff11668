#pragma once

#include <stdexcept>
#include <string>

namespace entforce {

/// Shape mismatch between matrices/vectors (odd quadrature count, dim mismatch).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input outside the physical domain of a closed form: unstable entangler
/// regime, undetectable force, negative occupation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Signal coefficient vanishes, so no finite force is resolvable.
class UndetectableError : public DomainError {
 public:
  explicit UndetectableError(const std::string& what) : DomainError(what) {}
};

/// Moment integration produced non-finite values.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unknown configuration key/value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace entforce
