#pragma once

// Support function of the simultaneous identification region.
//
// The region of jointly achievable group (TPR, TNR) tuples is a product
// over groups, so its support function h(mu) = sup { mu . rho } splits
// into one scalar problem per group. Each group problem is a linear-
// fractional program over the anti-responder profile eta; the Charnes-
// Cooper substitution t = 1/E[tau + eta], omega = eta * t turns it into,
// for each fixed t, a linear program with one equality constraint and box
// bounds: a fractional knapsack with an exact budget. t is scanned over
// [1/(Tbar + Cbar), 1/Tbar] on a grid, then refined by golden section
// around the best grid point (the value is piecewise linear in t with a
// single interior kink).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "respaudit/dataset.hpp"
#include "respaudit/errors.hpp"
#include "respaudit/identification.hpp"

namespace respaudit {

struct GroupContrast {
  std::string group;
  double tpr = 0.0;
  double tnr = 0.0;
};

/// Linear contrast over group rates: h(mu) = sup over the region of
/// sum_a (tpr_a * TPR_a + tnr_a * TNR_a).
struct ContrastDirection {
  std::vector<GroupContrast> entries;

  void validate() const {
    if (entries.empty()) throw ConfigError("contrast direction has no entries");
    bool any = false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].group.empty()) throw ConfigError("contrast entry with empty group");
      for (std::size_t j = i + 1; j < entries.size(); ++j)
        if (entries[i].group == entries[j].group)
          throw ConfigError("duplicate contrast entry for group '" + entries[i].group + "'");
      any = any || entries[i].tpr != 0.0 || entries[i].tnr != 0.0;
    }
    if (!any) throw ConfigError("contrast direction is identically zero");
  }
};

namespace detail {

struct Allocation {
  bool feasible = false;
  std::vector<double> amount;  // per-unit mass, aligned with the inputs
  double value = 0.0;          // sum coef[i] * amount[i], in index order
  std::size_t n_saturated = 0;
  std::ptrdiff_t fractional_index = -1;
};

/// Objective of an allocation, summed in index order so that two
/// allocations with identical amounts produce bitwise-identical values.
inline double allocation_value(std::span<const double> coef, std::span<const double> amount) {
  double v = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i) v += coef[i] * amount[i];
  return v;
}

/// max sum coef[i]*m[i]  s.t.  sum m[i] = budget, 0 <= m[i] <= cap[i].
/// Fractional knapsack with an exact budget: fill caps in decreasing
/// coefficient order (ties broken by index) until the budget is spent.
inline Allocation allocate_budget(std::span<const double> coef, std::span<const double> cap,
                                  double budget) {
  Allocation a;
  double cap_sum = 0.0;
  for (double c : cap) cap_sum += c;
  const double tol = 1e-9 * std::max(1.0, cap_sum);
  if (budget < -tol || budget > cap_sum + tol) return a;
  const double spend = std::clamp(budget, 0.0, cap_sum);

  if (spend == cap_sum) {
    // Full spend saturates every unit; bypass the fractional recompute so
    // the amounts are the caps bit-for-bit.
    a.amount.assign(cap.begin(), cap.end());
    for (double c : cap)
      if (c > 0.0) ++a.n_saturated;
    a.value = allocation_value(coef, a.amount);
    a.feasible = true;
    return a;
  }

  std::vector<std::size_t> order(coef.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return coef[i] > coef[j]; });

  a.amount.assign(coef.size(), 0.0);
  std::vector<std::size_t> full;
  double remaining = spend;
  for (std::size_t idx : order) {
    if (remaining <= 0.0) break;
    if (cap[idx] <= 0.0) continue;
    if (cap[idx] <= remaining) {
      full.push_back(idx);
      remaining -= cap[idx];
    } else {
      a.fractional_index = static_cast<std::ptrdiff_t>(idx);
      break;
    }
  }
  // Recompute the amounts from scratch in index order: the greedy loop's
  // running subtraction is order-dependent, this form is canonical.
  std::sort(full.begin(), full.end());
  double full_sum = 0.0;
  for (std::size_t idx : full) {
    a.amount[idx] = cap[idx];
    full_sum += cap[idx];
  }
  if (a.fractional_index >= 0) {
    const auto fi = static_cast<std::size_t>(a.fractional_index);
    a.amount[fi] = std::clamp(spend - full_sum, 0.0, cap[fi]);
  }
  a.n_saturated = full.size();
  a.value = allocation_value(coef, a.amount);
  a.feasible = true;
  return a;
}

}  // namespace detail

/// Solution of one group's scalar problem.
struct GroupOptimizer {
  std::string group;
  double value = 0.0;       // h over this group's factor of the region
  double t_star = 0.0;      // 1 / E[tau + eta*]
  double budget = 0.0;      // allocated omega mass at t_star
  std::size_t n_saturated = 0;
  std::ptrdiff_t fractional_index = -1;
  std::vector<double> eta;  // achieving profile, aligned with the observations
  double value_check = 0.0;  // objective recomputed through the rate formulas
  std::size_t skipped_singular = 0;
  std::size_t dropped_infeasible = 0;
};

struct SupportResult {
  double value = 0.0;
  std::vector<GroupOptimizer> per_group;
  int grid_resolution = 0;
};

namespace detail {

/// mu_tpr * rho_tpr(eta) + mu_tnr * rho_tnr(eta), each side guarded only
/// when its coefficient is nonzero.
inline double contrast_value_at(std::span<const GroupObservation> obs,
                                std::span<const double> eta, double mu_tpr, double mu_tnr,
                                const std::string& group) {
  double w[2] = {0.0, 0.0}, wt[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const int z = obs[i].treated ? 1 : 0;
    w[z] += obs[i].weight;
    wt[z] += obs[i].weight * (obs[i].tau + eta[i]);
  }
  const double W = w[0] + w[1];
  const double r1 = w[1] / W, r0 = w[0] / W;
  const double m1 = w[1] > 0.0 ? wt[1] / w[1] : 0.0;
  const double m0 = w[0] > 0.0 ? wt[0] / w[0] : 0.0;
  GroupStats shim;
  shim.group = group;
  double v = 0.0;
  if (mu_tpr != 0.0) {
    const double den = m0 * r0 + m1 * r1;
    check_denominator(den, shim, "responder");
    v += mu_tpr * (m1 * r1 / den);
  }
  if (mu_tnr != 0.0) {
    const double den = (1.0 - m0) * r0 + (1.0 - m1) * r1;
    check_denominator(den, shim, "non-responder");
    v += mu_tnr * ((1.0 - m0) * r0 / den);
  }
  return v;
}

inline GroupOptimizer optimize_group(std::span<const GroupObservation> obs, double mu_tpr,
                                     double mu_tnr, double B, int grid_n,
                                     const std::string& group) {
  const GroupStats gs = group_stats(obs, B, group);
  const double tau_bar = gs.mean_tau();
  const double clip_bar = gs.mean_clip();
  check_denominator(tau_bar, gs, "responder");

  GroupOptimizer out;
  out.group = group;
  out.eta.assign(obs.size(), 0.0);

  // Degenerate uncertainty set: eta is pinned at zero, nothing to search.
  if (clip_bar <= 0.0) {
    out.t_star = 1.0 / tau_bar;
    out.value = contrast_value_at(obs, out.eta, mu_tpr, mu_tnr, group);
    out.value_check = out.value;
    return out;
  }

  const double W = gs.weight;
  const std::size_t n = obs.size();
  std::vector<double> cap(n), coef(n), clip(n);
  for (std::size_t i = 0; i < n; ++i) clip[i] = clip_value(B, obs[i].mu0, obs[i].mu1);

  constexpr double kSingularWindow = 1e-6;
  struct Eval {
    double value = 0.0;
    Allocation alloc;
    bool skipped = false;
  };
  auto evaluate = [&](double t) -> std::optional<Eval> {
    Eval e;
    if (mu_tnr != 0.0 && std::fabs(t - 1.0) <= kSingularWindow) {
      e.skipped = true;
      return e;
    }
    for (std::size_t i = 0; i < n; ++i) {
      cap[i] = obs[i].weight * t * clip[i];
      if (obs[i].treated)
        coef[i] = mu_tpr / W;
      else
        coef[i] = mu_tnr != 0.0 ? -mu_tnr / ((t - 1.0) * W) : 0.0;
    }
    const double budget = W * (1.0 - t * tau_bar);
    e.alloc = allocate_budget(coef, cap, budget);
    if (!e.alloc.feasible) return std::nullopt;
    double constant = mu_tpr * gs.r1 * t * gs.tau1;
    if (mu_tnr != 0.0)
      constant += mu_tnr * gs.r0 * (t * (1.0 - gs.tau0)) / (t - 1.0);
    e.value = constant + e.alloc.value;
    return e;
  };

  const double t_lo = 1.0 / (tau_bar + clip_bar);
  const double t_hi = 1.0 / tau_bar;
  std::vector<double> t_grid(static_cast<std::size_t>(grid_n));
  for (int k = 0; k < grid_n; ++k)
    t_grid[static_cast<std::size_t>(k)] =
        k == 0 ? t_lo
               : (k == grid_n - 1
                      ? t_hi
                      : t_lo + (t_hi - t_lo) * static_cast<double>(k) /
                                   static_cast<double>(grid_n - 1));

  double best_value = -std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  std::ptrdiff_t best_k = -1;
  for (int k = 0; k < grid_n; ++k) {
    const double t = t_grid[static_cast<std::size_t>(k)];
    const auto e = evaluate(t);
    if (!e) {
      ++out.dropped_infeasible;
      continue;
    }
    if (e->skipped) {
      ++out.skipped_singular;
      continue;
    }
    if (e->value > best_value) {
      best_value = e->value;
      best_t = t;
      best_k = k;
    }
  }
  if (best_k < 0) {
    if (out.skipped_singular > 0 && out.dropped_infeasible == 0)
      throw SingularTError("group '" + group +
                           "': every grid point lies in the t=1 singular window");
    throw InfeasibleBudgetError("group '" + group +
                                "': no feasible grid point; stats are inconsistent");
  }

  // The value is piecewise linear in t with one interior kink; golden
  // section inside the best grid bracket pins the kink far below the grid
  // resolution. Skipped or infeasible probes count as -inf.
  {
    double lo = t_grid[static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, best_k - 1))];
    double hi = t_grid[static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(grid_n - 1, best_k + 1))];
    auto probe = [&](double t) {
      const auto e = evaluate(t);
      return (e && !e->skipped) ? e->value : -std::numeric_limits<double>::infinity();
    };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo);
    double d = lo + gr * (hi - lo);
    double fc = probe(c), fd = probe(d);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::fabs(hi)); ++it) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = probe(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = probe(d);
      }
      const double t_cand = fc > fd ? c : d;
      const double v_cand = std::max(fc, fd);
      if (v_cand > best_value) {
        best_value = v_cand;
        best_t = t_cand;
      }
    }
  }

  const auto final_eval = evaluate(best_t);
  if (!final_eval || final_eval->skipped)
    throw InfeasibleBudgetError("group '" + group +
                                "': selected scale did not re-evaluate; stats are inconsistent");
  out.value = best_value;
  out.t_star = best_t;
  out.budget = W * (1.0 - best_t * tau_bar);
  out.n_saturated = final_eval->alloc.n_saturated;
  out.fractional_index = final_eval->alloc.fractional_index;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = final_eval->alloc.amount[i];
    out.eta[i] = m > 0.0 ? m / (obs[i].weight * best_t) : 0.0;
  }
  out.value_check = contrast_value_at(obs, out.eta, mu_tpr, mu_tnr, group);
  return out;
}

}  // namespace detail

/// Support function over explicit per-group observation lists.
inline SupportResult support(
    const std::map<std::string, std::vector<GroupObservation>>& observations,
    const ContrastDirection& mu, double B, int grid_n = 1001) {
  mu.validate();
  if (grid_n < 2) throw ConfigError("grid resolution must be at least 2");
  if (B < 0.0 || B > 1.0)
    throw ConfigError("anti-responder budget must lie in [0,1], got " + std::to_string(B));
  SupportResult res;
  res.grid_resolution = grid_n;
  for (const auto& entry : mu.entries) {
    if (entry.tpr == 0.0 && entry.tnr == 0.0) continue;  // sup of 0 is 0
    const auto it = observations.find(entry.group);
    if (it == observations.end())
      throw ConfigError("unknown group '" + entry.group + "'");
    res.per_group.push_back(
        detail::optimize_group(it->second, entry.tpr, entry.tnr, B, grid_n, entry.group));
    res.value += res.per_group.back().value;
  }
  return res;
}

/// Support function over a scored dataset under an assignment.
inline SupportResult support(const Dataset& ds, std::span<const std::uint8_t> z,
                             const ContrastDirection& mu, double B, int grid_n = 1001) {
  mu.validate();
  std::map<std::string, std::vector<GroupObservation>> observations;
  for (const auto& entry : mu.entries)
    observations.emplace(entry.group, collect_group(ds, z, entry.group));
  return support(observations, mu, B, grid_n);
}

struct DisparityInterval {
  Metric metric = Metric::kTpr;
  std::string group_a, group_b;
  double B = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Sharp interval for rate(a) - rate(b): the closed-form product-region
/// extremes [lo_a - hi_b, hi_a - lo_b].
inline DisparityInterval disparity_extremes(const GroupStats& a, const GroupStats& b,
                                            Metric metric) {
  if (a.group == b.group) throw ConfigError("disparity requires two distinct groups");
  if (a.B != b.B)
    throw ConfigError("disparity requires both groups at the same budget");
  const RateInterval ia = detail::metric_interval(a, metric);
  const RateInterval ib = detail::metric_interval(b, metric);
  DisparityInterval d;
  d.metric = metric;
  d.group_a = a.group;
  d.group_b = b.group;
  d.B = a.B;
  d.lower = ia.lower - ib.upper;
  d.upper = ia.upper - ib.lower;
  return d;
}

inline DisparityInterval disparity_extremes(const Dataset& ds, std::span<const std::uint8_t> z,
                                            const std::string& a, const std::string& b,
                                            Metric metric, double B) {
  return disparity_extremes(group_stats(ds, z, a, B), group_stats(ds, z, b, B), metric);
}

}  // namespace respaudit
