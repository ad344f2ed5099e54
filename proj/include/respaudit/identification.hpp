#pragma once

// Responder-conditional error rates of a treatment policy.
//
// A unit is a responder when treatment flips its outcome from 0 to 1.
// Responder status is never observed, so the true-positive rate
// P(Z=1 | responder, group) and true-negative rate P(Z=0 | non-responder,
// group) of a policy Z are not point-identified in general. With
// anti-responders (units harmed by treatment) ruled out entirely they
// collapse to closed forms in the observable effect tau = mu1 - mu0:
//
//   TPR = tau1*r1 / (tau0*r0 + tau1*r1)
//   TNR = (1-tau0)*r0 / ((1-tau0)*r0 + (1-tau1)*r1)
//
// where r_z = P(Z=z | group) and tau_z = E[tau | group, Z=z]. Allowing an
// anti-responder share eta(x) of at most B per unit widens each rate to a
// sharp interval whose endpoints are again closed forms in the clipped
// budget means below.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "respaudit/dataset.hpp"
#include "respaudit/errors.hpp"

namespace respaudit {

/// Denominators below this are treated as zero responder (or non-responder)
/// mass and raise DegenerateGroupError.
inline constexpr double kDenominatorGuard = 1e-8;

/// One unit (or one population cell) of a single group, as the rate
/// computations see it. `weight` is 1 for sample records and the cell
/// probability for population cells.
struct GroupObservation {
  double tau = 0.0;
  double mu0 = 0.0;
  double mu1 = 0.0;
  bool treated = false;  // policy flag Z
  double weight = 1.0;
};

/// Per-unit cap on the anti-responder share: min(B, mu0, 1 - mu1).
inline double clip_value(double B, double mu0, double mu1) {
  return std::min(B, std::min(mu0, 1.0 - mu1));
}

/// Weighted sufficient statistics of one group under one policy at one
/// anti-responder budget B. Empty policy cells contribute zero mass and
/// zero conditional means.
struct GroupStats {
  std::string group;
  double B = 0.0;
  double r1 = 0.0, r0 = 0.0;      // policy cell shares, r0 + r1 = 1
  double tau1 = 0.0, tau0 = 0.0;  // E[tau | Z=z]
  double clip1 = 0.0, clip0 = 0.0;  // E[min(B, mu0, 1-mu1) | Z=z]
  std::size_t n = 0;
  double weight = 0.0;  // total weight

  double mean_tau() const { return tau0 * r0 + tau1 * r1; }
  double mean_clip() const { return clip0 * r0 + clip1 * r1; }
};

inline GroupStats group_stats(std::span<const GroupObservation> obs, double B,
                              std::string group = "") {
  if (B < 0.0 || B > 1.0)
    throw ConfigError("anti-responder budget must lie in [0,1], got " + std::to_string(B));
  if (obs.empty()) throw DegenerateGroupError("group '" + group + "' has no observations");
  double w[2] = {0.0, 0.0}, wt[2] = {0.0, 0.0}, wc[2] = {0.0, 0.0};
  for (const auto& o : obs) {
    if (o.weight < 0.0) throw ValidationError("negative observation weight");
    const int z = o.treated ? 1 : 0;
    w[z] += o.weight;
    wt[z] += o.weight * o.tau;
    wc[z] += o.weight * clip_value(B, o.mu0, o.mu1);
  }
  const double W = w[0] + w[1];
  if (W <= 0.0) throw DegenerateGroupError("group '" + group + "' has zero total weight");
  GroupStats gs;
  gs.group = std::move(group);
  gs.B = B;
  gs.r1 = w[1] / W;
  gs.r0 = w[0] / W;
  gs.tau1 = w[1] > 0.0 ? wt[1] / w[1] : 0.0;
  gs.tau0 = w[0] > 0.0 ? wt[0] / w[0] : 0.0;
  gs.clip1 = w[1] > 0.0 ? wc[1] / w[1] : 0.0;
  gs.clip0 = w[0] > 0.0 ? wc[0] / w[0] : 0.0;
  gs.n = obs.size();
  gs.weight = W;
  return gs;
}

struct PointRates {
  double tpr = 0.0;
  double tnr = 0.0;
};

enum class Metric { kTpr, kTnr };

inline const char* metric_name(Metric m) { return m == Metric::kTpr ? "tpr" : "tnr"; }

namespace detail {

inline void check_denominator(double value, const GroupStats& gs, const char* which) {
  if (value < kDenominatorGuard)
    throw DegenerateGroupError("group '" + gs.group + "': " + which + " mass " +
                               std::to_string(value) + " is below the guard " +
                               std::to_string(kDenominatorGuard) +
                               "; rates are undefined");
}

}  // namespace detail

/// Rates under the no-anti-responder assumption (point identification).
inline PointRates point_rates(const GroupStats& gs) {
  const double resp = gs.tau0 * gs.r0 + gs.tau1 * gs.r1;
  const double nonresp = (1.0 - gs.tau0) * gs.r0 + (1.0 - gs.tau1) * gs.r1;
  detail::check_denominator(resp, gs, "responder");
  detail::check_denominator(nonresp, gs, "non-responder");
  return {gs.tau1 * gs.r1 / resp, (1.0 - gs.tau0) * gs.r0 / nonresp};
}

/// Rates under an explicit anti-responder profile eta (one entry per
/// observation, each in [0, min(mu0, 1-mu1)], the widest range any budget
/// allows).
inline PointRates rho(std::span<const GroupObservation> obs, std::span<const double> eta,
                      const std::string& group = "") {
  if (eta.size() != obs.size())
    throw ValidationError("eta profile carries " + std::to_string(eta.size()) +
                          " entries for " + std::to_string(obs.size()) + " observations");
  constexpr double kSlack = 1e-12;
  double w[2] = {0.0, 0.0}, wt[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    const double cap = std::min(o.mu0, 1.0 - o.mu1);
    if (eta[i] < -kSlack || eta[i] > cap + kSlack)
      throw EtaOutOfRangeError("eta[" + std::to_string(i) + "] = " +
                               std::to_string(eta[i]) + " outside [0, " +
                               std::to_string(cap) + "]");
    const int z = o.treated ? 1 : 0;
    w[z] += o.weight;
    wt[z] += o.weight * (o.tau + eta[i]);
  }
  const double W = w[0] + w[1];
  if (W <= 0.0) throw DegenerateGroupError("group '" + group + "' has zero total weight");
  const double r1 = w[1] / W, r0 = w[0] / W;
  const double m1 = w[1] > 0.0 ? wt[1] / w[1] : 0.0;
  const double m0 = w[0] > 0.0 ? wt[0] / w[0] : 0.0;
  GroupStats shim;  // reuses the denominator guard message path
  shim.group = group;
  const double resp = m0 * r0 + m1 * r1;
  const double nonresp = (1.0 - m0) * r0 + (1.0 - m1) * r1;
  detail::check_denominator(resp, shim, "responder");
  detail::check_denominator(nonresp, shim, "non-responder");
  return {m1 * r1 / resp, (1.0 - m0) * r0 / nonresp};
}

struct RateInterval {
  Metric metric = Metric::kTpr;
  std::string group;
  double B = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
  bool contains(double v, double slack = 0.0) const {
    return v >= lower - slack && v <= upper + slack;
  }
};

namespace detail {

inline RateInterval tpr_interval(const GroupStats& gs) {
  const double up_den = gs.tau0 * gs.r0 + (gs.tau1 + gs.clip1) * gs.r1;
  const double lo_den = (gs.tau0 + gs.clip0) * gs.r0 + gs.tau1 * gs.r1;
  check_denominator(up_den, gs, "responder");
  check_denominator(lo_den, gs, "responder");
  RateInterval iv;
  iv.metric = Metric::kTpr;
  iv.group = gs.group;
  iv.B = gs.B;
  iv.upper = (gs.tau1 + gs.clip1) * gs.r1 / up_den;
  iv.lower = gs.tau1 * gs.r1 / lo_den;
  return iv;
}

inline RateInterval tnr_interval(const GroupStats& gs) {
  const double up_den = (1.0 - gs.tau0) * gs.r0 + (1.0 - gs.tau1 - gs.clip1) * gs.r1;
  const double lo_den = (1.0 - gs.tau0 - gs.clip0) * gs.r0 + (1.0 - gs.tau1) * gs.r1;
  check_denominator(up_den, gs, "non-responder");
  check_denominator(lo_den, gs, "non-responder");
  RateInterval iv;
  iv.metric = Metric::kTnr;
  iv.group = gs.group;
  iv.B = gs.B;
  iv.upper = (1.0 - gs.tau0) * gs.r0 / up_den;
  iv.lower = (1.0 - gs.tau0 - gs.clip0) * gs.r0 / lo_den;
  return iv;
}

inline RateInterval metric_interval(const GroupStats& gs, Metric m) {
  return m == Metric::kTpr ? tpr_interval(gs) : tnr_interval(gs);
}

}  // namespace detail

/// Sharp TPR and TNR intervals at the stats' budget. The upper endpoints of
/// both intervals are attained together by the single profile eta = cap on
/// treated units (and zero elsewhere); the lower endpoints by eta = cap on
/// untreated units. At B = 0 both intervals collapse to point_rates.
struct RateBounds {
  RateInterval tpr;
  RateInterval tnr;
  bool extremes_jointly_achievable = true;
};

inline RateBounds bounds(const GroupStats& gs) {
  RateBounds b;
  b.tpr = detail::tpr_interval(gs);
  b.tnr = detail::tnr_interval(gs);
  return b;
}

/// Overload taking the budget explicitly; it must match the one the stats
/// were aggregated at, since the clip means depend on it.
inline RateBounds bounds(const GroupStats& gs, double B) {
  if (B < 0.0 || B > 1.0)
    throw ConfigError("anti-responder budget must lie in [0,1], got " + std::to_string(B));
  if (B != gs.B)
    throw ConfigError("stats were aggregated at B=" + std::to_string(gs.B) +
                      "; recompute group_stats for B=" + std::to_string(B));
  return bounds(gs);
}

/// Filters one group's scored records into observations under a policy.
inline std::vector<GroupObservation> collect_group(const Dataset& ds,
                                                   std::span<const std::uint8_t> z,
                                                   const std::string& group) {
  if (!ds.has_group(group)) throw ConfigError("unknown group '" + group + "'");
  if (z.size() != ds.size())
    throw ValidationError("policy carries " + std::to_string(z.size()) +
                          " flags for " + std::to_string(ds.size()) + " records");
  std::vector<GroupObservation> obs;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds.records()[i];
    if (r.group != group) continue;
    if (!r.scored())
      throw ValidationError("unit '" + r.unit_id +
                            "' has no scores; run an estimator or supply mu0/mu1");
    obs.push_back({*r.tau_hat, *r.mu0_hat, *r.mu1_hat, z[i] != 0, 1.0});
  }
  return obs;
}

/// Dataset-level convenience: stats of one group under an assignment.
inline GroupStats group_stats(const Dataset& ds, std::span<const std::uint8_t> z,
                              const std::string& group, double B) {
  const auto obs = collect_group(ds, z, group);
  return group_stats(obs, B, group);
}

/// Share of records with a strictly negative effect estimate.
inline double negative_tau_fraction(const Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  std::size_t neg = 0;
  for (const auto& r : ds.records())
    if (r.tau_hat && *r.tau_hat < 0.0) ++neg;
  return static_cast<double>(neg) / static_cast<double>(ds.size());
}

}  // namespace respaudit
