#pragma once

#include <stdexcept>
#include <string>

#include "safetube/types.hpp"

namespace safetube {

/// Caller broke a documented precondition (dimension mismatch, negative time, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced NaN/Inf.
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: unknown builtin id, malformed scenario, invalid flag value.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The metric is not positive definite (or otherwise unusable) at a state.
class MetricDomainError : public std::runtime_error {
 public:
  MetricDomainError(const std::string& what, Vec x) : std::runtime_error(what), x_(std::move(x)) {}
  const Vec& state() const { return x_; }

 private:
  Vec x_;
};

/// A certificate quantity cannot be computed (e.g. division by a vanishing singular value).
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PlannerFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace safetube
