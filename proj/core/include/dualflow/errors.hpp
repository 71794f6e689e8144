#pragma once

#include <stdexcept>
#include <string>

namespace dualflow {

/// Invalid parameters supplied by a caller or a configuration file.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A geometric query outside the region where it is defined
/// (point outside the domain, beyond the focal distance, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A structural invariant of an input object does not hold
/// (non-convex curve, asymmetric node set, unsorted sample, ...).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical resolution is insufficient for the requested computation.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough surviving samples to evaluate a statistic.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dualflow
