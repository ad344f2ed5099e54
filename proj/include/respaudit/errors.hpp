#pragma once

#include <stdexcept>
#include <string>

namespace respaudit {

/// Base class for every error raised by this library.
class AuditError : public std::runtime_error {
 public:
  explicit AuditError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input data or records; the message names the offending row.
class ValidationError : public AuditError {
 public:
  using AuditError::AuditError;
};

/// Bad user-supplied configuration (unknown group, out-of-range flag, ...).
class ConfigError : public AuditError {
 public:
  using AuditError::AuditError;
};

/// A rate denominator fell below the degeneracy threshold: the group has
/// numerically no responders (or no non-responders) under the policy.
class DegenerateGroupError : public AuditError {
 public:
  using AuditError::AuditError;
};

/// A supplied anti-responder profile leaves its feasible box.
class EtaOutOfRangeError : public AuditError {
 public:
  using AuditError::AuditError;
};

/// The inner allocation problem has no feasible point at any scanned scale.
class InfeasibleBudgetError : public AuditError {
 public:
  using AuditError::AuditError;
};

/// Every candidate scale hit the removable singularity of the objective.
class SingularTError : public AuditError {
 public:
  using AuditError::AuditError;
};

/// Nuisance estimation cannot proceed (e.g. an empty training cell).
class EstimationError : public AuditError {
 public:
  using AuditError::AuditError;
};

}  // namespace respaudit
