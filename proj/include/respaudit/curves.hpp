#pragma once

// Threshold sweeps: disparity curves, robust ROC / xROC bands, and xAUC
// bounds. A band holds a lower and an upper parametric curve indexed by a
// descending threshold sweep; thresholds where a group is degenerate are
// kept as explicit gaps, never interpolated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "respaudit/dataset.hpp"
#include "respaudit/errors.hpp"
#include "respaudit/identification.hpp"
#include "respaudit/support.hpp"

namespace respaudit {

enum class CurveKind { kRoc, kXroc, kTprDisparity, kTnrDisparity };

inline const char* curve_kind_name(CurveKind k) {
  switch (k) {
    case CurveKind::kRoc: return "roc";
    case CurveKind::kXroc: return "xroc";
    case CurveKind::kTprDisparity: return "tpr_disparity";
    case CurveKind::kTnrDisparity: return "tnr_disparity";
  }
  return "?";
}

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};

/// Lower/upper parametric curves over a descending threshold sweep.
/// Entries are aligned with `thresholds`; where `gap[i]` is set the point
/// slots hold NaN and `gap_reason[i]` says why.
struct CurveBand {
  CurveKind kind = CurveKind::kRoc;
  std::string group_a;
  std::string group_b;  // empty for single-group bands
  double B = 0.0;
  std::vector<double> thresholds;
  std::vector<CurvePoint> lower;
  std::vector<CurvePoint> upper;
  std::vector<std::uint8_t> gap;
  std::vector<std::string> gap_reason;

  std::size_t size() const { return thresholds.size(); }
  std::size_t n_gaps() const {
    std::size_t k = 0;
    for (auto g : gap) k += g ? 1 : 0;
    return k;
  }
};

namespace detail {

/// Incremental per-group sweep: observations sorted by tau descending;
/// GroupStats at any threshold come from prefix sums over the first k
/// observations (those with tau >= theta). Queries must descend.
class GroupSweep {
 public:
  GroupSweep(std::vector<GroupObservation> obs, double B, std::string group)
      : obs_(std::move(obs)), B_(B), group_(std::move(group)) {
    if (obs_.empty())
      throw DegenerateGroupError("group '" + group_ + "' has no observations");
    std::stable_sort(obs_.begin(), obs_.end(),
                     [](const GroupObservation& a, const GroupObservation& b) {
                       return a.tau > b.tau;
                     });
    const std::size_t n = obs_.size();
    cw_.assign(n + 1, 0.0);
    cwt_.assign(n + 1, 0.0);
    cwc_.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = obs_[i].weight;
      cw_[i + 1] = cw_[i] + w;
      cwt_[i + 1] = cwt_[i] + w * obs_[i].tau;
      cwc_[i + 1] = cwc_[i] + w * clip_value(B_, obs_[i].mu0, obs_[i].mu1);
    }
    if (!(cw_[n] > 0.0))
      throw DegenerateGroupError("group '" + group_ + "' has zero total weight");
  }

  GroupStats at(double theta) {
    while (k_ < obs_.size() && obs_[k_].tau >= theta) ++k_;
    const std::size_t n = obs_.size();
    const double W = cw_[n];
    const double w1 = cw_[k_], w0 = W - cw_[k_];
    GroupStats gs;
    gs.group = group_;
    gs.B = B_;
    gs.n = n;
    gs.weight = W;
    gs.r1 = w1 / W;
    gs.r0 = w0 / W;
    gs.tau1 = w1 > 0.0 ? cwt_[k_] / w1 : 0.0;
    gs.tau0 = w0 > 0.0 ? (cwt_[n] - cwt_[k_]) / w0 : 0.0;
    gs.clip1 = w1 > 0.0 ? cwc_[k_] / w1 : 0.0;
    gs.clip0 = w0 > 0.0 ? (cwc_[n] - cwc_[k_]) / w0 : 0.0;
    return gs;
  }

 private:
  std::vector<GroupObservation> obs_;
  double B_;
  std::string group_;
  std::vector<double> cw_, cwt_, cwc_;
  std::size_t k_ = 0;
};

inline std::vector<double> descending_sweep(std::vector<double> taus) {
  std::sort(taus.begin(), taus.end(), std::greater<>());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  std::vector<double> sweep;
  sweep.push_back(std::numeric_limits<double>::infinity());
  for (double t : taus) sweep.push_back(t);
  sweep.push_back(-std::numeric_limits<double>::infinity());
  return sweep;
}

inline void push_gap(CurveBand& band, double theta, const std::string& reason) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  band.thresholds.push_back(theta);
  band.lower.push_back({nan, nan});
  band.upper.push_back({nan, nan});
  band.gap.push_back(1);
  band.gap_reason.push_back(reason);
}

inline void push_point(CurveBand& band, double theta, CurvePoint lo, CurvePoint up) {
  band.thresholds.push_back(theta);
  band.lower.push_back(lo);
  band.upper.push_back(up);
  band.gap.push_back(0);
  band.gap_reason.emplace_back();
}

inline void require_descending(std::span<const double> thresholds) {
  if (thresholds.empty()) throw ConfigError("threshold sweep is empty");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] < thresholds[i - 1]))
      throw ConfigError("threshold sweep must be strictly descending");
}

}  // namespace detail

/// Default sweep: distinct observed effect estimates, descending, with
/// +inf (treat nobody) and -inf (treat everybody) sentinels.
inline std::vector<double> default_thresholds(const Dataset& ds) {
  std::vector<double> taus;
  for (const auto& r : ds.records()) {
    if (!r.tau_hat)
      throw ValidationError("unit '" + r.unit_id + "' has no tau estimate");
    taus.push_back(*r.tau_hat);
  }
  return detail::descending_sweep(std::move(taus));
}

inline std::vector<double> default_thresholds(
    const std::map<std::string, std::vector<GroupObservation>>& observations) {
  std::vector<double> taus;
  for (const auto& [g, obs] : observations)
    for (const auto& o : obs) taus.push_back(o.tau);
  return detail::descending_sweep(std::move(taus));
}

// ---------------------------------------------------------------------------
// Band construction over observation lists

inline CurveBand disparity_curve(std::vector<GroupObservation> obs_a,
                                 std::vector<GroupObservation> obs_b,
                                 const std::string& a, const std::string& b, Metric metric,
                                 double B, std::span<const double> thresholds) {
  if (a == b) throw ConfigError("disparity requires two distinct groups");
  detail::require_descending(thresholds);
  detail::GroupSweep sweep_a(std::move(obs_a), B, a);
  detail::GroupSweep sweep_b(std::move(obs_b), B, b);
  CurveBand band;
  band.kind = metric == Metric::kTpr ? CurveKind::kTprDisparity : CurveKind::kTnrDisparity;
  band.group_a = a;
  band.group_b = b;
  band.B = B;
  for (double theta : thresholds) {
    const GroupStats ga = sweep_a.at(theta);
    const GroupStats gb = sweep_b.at(theta);
    try {
      const RateInterval ia = detail::metric_interval(ga, metric);
      const RateInterval ib = detail::metric_interval(gb, metric);
      detail::push_point(band, theta, {theta, ia.lower - ib.upper},
                         {theta, ia.upper - ib.lower});
    } catch (const DegenerateGroupError& e) {
      detail::push_gap(band, theta, e.what());
    }
  }
  return band;
}

inline CurveBand robust_xroc(std::vector<GroupObservation> obs_a,
                             std::vector<GroupObservation> obs_b, const std::string& a,
                             const std::string& b, double B,
                             std::span<const double> thresholds) {
  detail::require_descending(thresholds);
  detail::GroupSweep sweep_a(std::move(obs_a), B, a);
  detail::GroupSweep sweep_b(std::move(obs_b), B, b);
  CurveBand band;
  band.kind = a == b ? CurveKind::kRoc : CurveKind::kXroc;
  band.group_a = a;
  band.group_b = a == b ? std::string() : b;
  band.B = B;
  for (double theta : thresholds) {
    const GroupStats ga = sweep_a.at(theta);
    const GroupStats gb = sweep_b.at(theta);
    try {
      const RateInterval tpr = detail::tpr_interval(ga);
      const RateInterval tnr = detail::tnr_interval(gb);
      detail::push_point(band, theta, {1.0 - tnr.lower, tpr.lower},
                         {1.0 - tnr.upper, tpr.upper});
    } catch (const DegenerateGroupError& e) {
      detail::push_gap(band, theta, e.what());
    }
  }
  return band;
}

inline CurveBand robust_roc(std::vector<GroupObservation> obs_a, const std::string& a,
                            double B, std::span<const double> thresholds) {
  auto copy = obs_a;
  return robust_xroc(std::move(obs_a), std::move(copy), a, a, B, thresholds);
}

// ---------------------------------------------------------------------------
// Dataset-level wrappers

inline CurveBand disparity_curve(const Dataset& ds, const std::string& a,
                                 const std::string& b, Metric metric, double B,
                                 std::span<const double> thresholds) {
  std::vector<std::uint8_t> z(ds.size(), 0);  // assignment is re-derived per theta
  return disparity_curve(collect_group(ds, z, a), collect_group(ds, z, b), a, b, metric, B,
                         thresholds);
}

inline CurveBand robust_roc(const Dataset& ds, const std::string& a, double B,
                            std::span<const double> thresholds) {
  std::vector<std::uint8_t> z(ds.size(), 0);
  return robust_roc(collect_group(ds, z, a), a, B, thresholds);
}

inline CurveBand robust_xroc(const Dataset& ds, const std::string& a, const std::string& b,
                             double B, std::span<const double> thresholds) {
  std::vector<std::uint8_t> z(ds.size(), 0);
  return robust_xroc(collect_group(ds, z, a), collect_group(ds, z, b), a, b, B, thresholds);
}

// ---------------------------------------------------------------------------
// Areas and averaging

/// Trapezoidal areas under the lower and upper curves of an ROC-like band,
/// walked in threshold order (which orders x nondecreasingly). Gap slots
/// are skipped; the remaining endpoints must reach (0,0) and (1,1).
inline std::pair<double, double> xauc_bounds(const CurveBand& band) {
  if (band.kind != CurveKind::kRoc && band.kind != CurveKind::kXroc)
    throw ConfigError("area bounds are defined for roc/xroc bands only");
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < band.size(); ++i)
    if (!band.gap[i]) live.push_back(i);
  if (live.size() < 2) throw ValidationError("band has fewer than two usable points");
  constexpr double kEndTol = 1e-9;
  for (const auto* curve : {&band.lower, &band.upper}) {
    const auto& first = (*curve)[live.front()];
    const auto& last = (*curve)[live.back()];
    if (std::fabs(first.x) > kEndTol || std::fabs(first.y) > kEndTol ||
        std::fabs(last.x - 1.0) > kEndTol || std::fabs(last.y - 1.0) > kEndTol)
      throw ValidationError("band endpoints do not reach (0,0) and (1,1)");
  }
  auto area = [&](const std::vector<CurvePoint>& pts) {
    double acc = 0.0;
    for (std::size_t j = 1; j < live.size(); ++j) {
      const auto& p = pts[live[j - 1]];
      const auto& q = pts[live[j]];
      if (q.x < p.x - 1e-9) throw ValidationError("band x-coordinates are unsorted");
      acc += (q.x - p.x) * (q.y + p.y) / 2.0;
    }
    return acc;
  };
  return {area(band.lower), area(band.upper)};
}

/// Pointwise mean of bands over a common threshold grid (the union of all
/// sweeps). Each band is evaluated as a step function: its value at a
/// query threshold is its value at the smallest stored threshold >= the
/// query, which is exact for empirical sweeps. Bands that are degenerate
/// at a grid point are left out of that point's mean; points where no band
/// contributes stay gaps.
inline CurveBand average_bands(std::span<const CurveBand> bands) {
  if (bands.empty()) throw ConfigError("no bands to average");
  const auto& head = bands.front();
  for (const auto& b : bands) {
    if (b.kind != head.kind || b.group_a != head.group_a || b.group_b != head.group_b ||
        b.B != head.B)
      throw ConfigError("cannot average bands with mismatched kind, groups, or budget");
    if (b.size() == 0) throw ConfigError("cannot average an empty band");
  }

  std::vector<double> grid;
  for (const auto& b : bands)
    grid.insert(grid.end(), b.thresholds.begin(), b.thresholds.end());
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  CurveBand out;
  out.kind = head.kind;
  out.group_a = head.group_a;
  out.group_b = head.group_b;
  out.B = head.B;

  // Per-band cursor: stored thresholds descend, queries descend, so the
  // step-function slot (last stored threshold >= query) only moves forward.
  std::vector<std::size_t> cursor(bands.size(), 0);
  for (double q : grid) {
    double lx = 0.0, ly = 0.0, ux = 0.0, uy = 0.0;
    std::size_t contributors = 0;
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
      const auto& b = bands[bi];
      auto& c = cursor[bi];
      while (c + 1 < b.size() && b.thresholds[c + 1] >= q) ++c;
      if (b.thresholds[c] < q) continue;  // q above this band's sweep
      if (b.gap[c]) continue;
      lx += b.lower[c].x;
      ly += b.lower[c].y;
      ux += b.upper[c].x;
      uy += b.upper[c].y;
      ++contributors;
    }
    if (contributors == 0) {
      detail::push_gap(out, q, "no contributing band");
    } else {
      const double m = static_cast<double>(contributors);
      if (head.kind == CurveKind::kTprDisparity || head.kind == CurveKind::kTnrDisparity) {
        // Disparity abscissa is the threshold itself, not an averaged one.
        detail::push_point(out, q, {q, ly / m}, {q, uy / m});
      } else {
        detail::push_point(out, q, {lx / m, ly / m}, {ux / m, uy / m});
      }
    }
  }
  return out;
}

}  // namespace respaudit
