#pragma once

// Unit-level data model: one record per individual, an immutable validated
// dataset, and intervention policies that threshold estimated effects.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "respaudit/errors.hpp"

namespace respaudit {

inline constexpr double kTauConsistencyTol = 1e-9;

struct UnitRecord {
  std::string unit_id;
  std::vector<double> features;
  std::string group;
  int treatment = 0;  // assigned arm, 0 or 1
  int outcome = 0;    // observed binary outcome under the assigned arm
  std::optional<double> mu0_hat;  // P(Y=1 | arm 0, features, group)
  std::optional<double> mu1_hat;  // P(Y=1 | arm 1, features, group)
  std::optional<double> tau_hat;  // mu1_hat - mu0_hat

  bool scored() const { return mu0_hat && mu1_hat && tau_hat; }
};

namespace detail {

inline void validate_record(const UnitRecord& r, std::size_t n_features) {
  const std::string where = "unit '" + r.unit_id + "'";
  if (r.unit_id.empty()) throw ValidationError("record with empty unit id");
  if (r.group.empty()) throw ValidationError(where + ": empty group label");
  if (r.treatment != 0 && r.treatment != 1)
    throw ValidationError(where + ": treatment value " +
                          std::to_string(r.treatment) + " is not binary");
  if (r.outcome != 0 && r.outcome != 1)
    throw ValidationError(where + ": outcome value " +
                          std::to_string(r.outcome) + " is not binary");
  if (r.features.size() != n_features)
    throw ValidationError(where + ": expected " + std::to_string(n_features) +
                          " features, got " + std::to_string(r.features.size()));
  for (double x : r.features)
    if (!std::isfinite(x)) throw ValidationError(where + ": non-finite feature value");
  for (const auto* m : {&r.mu0_hat, &r.mu1_hat}) {
    if (*m && (!std::isfinite(**m) || **m < 0.0 || **m > 1.0))
      throw ValidationError(where + ": score out of range");
  }
  if (r.tau_hat && !std::isfinite(*r.tau_hat))
    throw ValidationError(where + ": score out of range");
  if (r.mu0_hat && r.mu1_hat && r.tau_hat &&
      std::fabs(*r.tau_hat - (*r.mu1_hat - *r.mu0_hat)) > kTauConsistencyTol)
    throw ValidationError(where + ": tau is inconsistent with mu1 - mu0");
}

}  // namespace detail

/// Immutable collection of unit records. Construction validates every
/// record, derives the sorted group list, and checks that each group was
/// observed under both treatment arms.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<UnitRecord> records, std::vector<std::string> feature_names)
      : records_(std::move(records)), feature_names_(std::move(feature_names)) {
    for (const auto& r : records_) detail::validate_record(r, feature_names_.size());
    for (const auto& r : records_) groups_.push_back(r.group);
    std::sort(groups_.begin(), groups_.end());
    groups_.erase(std::unique(groups_.begin(), groups_.end()), groups_.end());
    for (const auto& g : groups_) {
      bool arm[2] = {false, false};
      for (const auto& r : records_)
        if (r.group == g) arm[r.treatment] = true;
      if (!arm[0] || !arm[1])
        throw ValidationError("group '" + g + "' was never observed under arm " +
                              (arm[0] ? "1" : "0"));
    }
  }

  const std::vector<UnitRecord>& records() const { return records_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  /// Distinct group labels, sorted.
  const std::vector<std::string>& groups() const { return groups_; }
  std::size_t size() const { return records_.size(); }

  bool has_group(const std::string& g) const {
    return std::binary_search(groups_.begin(), groups_.end(), g);
  }

  /// True when every record carries mu0_hat, mu1_hat and tau_hat.
  bool scored() const {
    return std::all_of(records_.begin(), records_.end(),
                       [](const UnitRecord& r) { return r.scored(); });
  }

 private:
  std::vector<UnitRecord> records_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> groups_;
};

/// Treatment assignment rule. A threshold policy treats every unit whose
/// estimated effect reaches the threshold (ties treated); an explicit
/// policy carries one flag per record.
struct Policy {
  enum class Kind { kThreshold, kExplicit };

  Kind kind = Kind::kThreshold;
  double theta = 0.0;
  std::vector<std::uint8_t> assignment;

  static Policy threshold(double theta) {
    Policy p;
    p.kind = Kind::kThreshold;
    p.theta = theta;
    return p;
  }

  static Policy explicit_assignment(std::vector<std::uint8_t> z) {
    Policy p;
    p.kind = Kind::kExplicit;
    p.assignment = std::move(z);
    return p;
  }
};

/// Evaluates a policy on a dataset, returning one 0/1 flag per record.
inline std::vector<std::uint8_t> apply_policy(const Dataset& ds, const Policy& p) {
  std::vector<std::uint8_t> z;
  z.reserve(ds.size());
  if (p.kind == Policy::Kind::kExplicit) {
    if (p.assignment.size() != ds.size())
      throw ValidationError("explicit policy carries " +
                            std::to_string(p.assignment.size()) + " flags for " +
                            std::to_string(ds.size()) + " records");
    for (std::uint8_t v : p.assignment) z.push_back(v ? 1 : 0);
    return z;
  }
  for (const auto& r : ds.records()) {
    if (!r.tau_hat)
      throw ValidationError("unit '" + r.unit_id +
                            "' has no tau estimate; threshold policy undefined");
    z.push_back(*r.tau_hat >= p.theta ? 1 : 0);
  }
  return z;
}

}  // namespace respaudit
