#pragma once

// Synthetic populations with fully specified potential-outcome joints.
//
// A spec fixes, for every covariate point x and group a, the response-type
// probabilities p_ij(x,a) = P(Y(0)=i, Y(1)=j | x, a) and a treatment
// propensity. Everything downstream is exact arithmetic over these cells:
// ground-truth rates, the non-identifiability witness pair, and the
// brute-force sharpness check that the closed-form bounds are attained.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "respaudit/dataset.hpp"
#include "respaudit/errors.hpp"
#include "respaudit/identification.hpp"
#include "respaudit/rng.hpp"

namespace respaudit {

/// Response-type distribution and treatment propensity at one (x, group).
struct ResponseCell {
  double p00 = 0.0;  // Y(0)=0, Y(1)=0
  double p01 = 0.0;  // Y(0)=0, Y(1)=1: responder
  double p10 = 0.0;  // Y(0)=1, Y(1)=0: anti-responder
  double p11 = 0.0;  // Y(0)=1, Y(1)=1
  double propensity = 0.5;

  double mu0() const { return p10 + p11; }  // P(Y=1 | T=0)
  double mu1() const { return p01 + p11; }  // P(Y=1 | T=1)
  double tau() const { return p01 - p10; }
};

inline constexpr double kSimplexTol = 1e-12;

/// A finite population: covariate points with probabilities, groups with
/// probabilities (independent of X), and one ResponseCell per (x, group).
struct SyntheticSpec {
  std::vector<std::vector<double>> x_support;
  std::vector<double> x_probs;
  std::vector<std::string> groups;
  std::vector<double> group_probs;
  std::vector<ResponseCell> cells;  // row-major: x_index * groups.size() + group_index

  std::size_t n_cells() const { return x_support.size() * groups.size(); }

  const ResponseCell& cell(std::size_t xi, std::size_t gi) const {
    return cells[xi * groups.size() + gi];
  }
  ResponseCell& cell(std::size_t xi, std::size_t gi) {
    return cells[xi * groups.size() + gi];
  }

  std::size_t group_index(const std::string& g) const {
    for (std::size_t i = 0; i < groups.size(); ++i)
      if (groups[i] == g) return i;
    throw ConfigError("unknown group '" + g + "'");
  }

  void validate() const {
    if (x_support.empty()) throw ValidationError("spec has no covariate points");
    if (groups.empty()) throw ValidationError("spec has no groups");
    if (x_probs.size() != x_support.size() || group_probs.size() != groups.size())
      throw ValidationError("spec probability vectors do not match support sizes");
    if (cells.size() != n_cells())
      throw ValidationError("spec carries " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(n_cells()));
    const std::size_t dim = x_support.front().size();
    for (const auto& x : x_support)
      if (x.size() != dim) throw ValidationError("covariate points have mixed dimensions");
    auto check_simplex = [](const std::vector<double>& p, const char* what) {
      double sum = 0.0;
      for (double v : p) {
        if (!(v >= 0.0)) throw ValidationError(std::string(what) + " has a negative entry");
        sum += v;
      }
      if (std::fabs(sum - 1.0) > kSimplexTol)
        throw ValidationError(std::string(what) + " does not sum to 1");
    };
    check_simplex(x_probs, "x_probs");
    check_simplex(group_probs, "group_probs");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& q = cells[c];
      check_simplex({q.p00, q.p01, q.p10, q.p11},
                    ("cell " + std::to_string(c) + " response probabilities").c_str());
      if (!(q.propensity > 0.0 && q.propensity < 1.0))
        throw ValidationError("cell " + std::to_string(c) + " propensity outside (0,1)");
    }
  }
};

// ---------------------------------------------------------------------------
// Spec file format (JSON)

inline nlohmann::ordered_json spec_to_json(const SyntheticSpec& spec) {
  nlohmann::ordered_json j;
  j["x_support"] = spec.x_support;
  j["x_probs"] = spec.x_probs;
  j["groups"] = spec.groups;
  j["group_probs"] = spec.group_probs;
  auto cells = nlohmann::ordered_json::array();
  for (std::size_t xi = 0; xi < spec.x_support.size(); ++xi) {
    for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
      const auto& q = spec.cell(xi, gi);
      nlohmann::ordered_json c;
      c["x_index"] = xi;
      c["group"] = spec.groups[gi];
      c["p00"] = q.p00;
      c["p01"] = q.p01;
      c["p10"] = q.p10;
      c["p11"] = q.p11;
      c["propensity"] = q.propensity;
      cells.push_back(std::move(c));
    }
  }
  j["cells"] = std::move(cells);
  return j;
}

inline SyntheticSpec spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  try {
    spec.x_support = j.at("x_support").get<std::vector<std::vector<double>>>();
    spec.x_probs = j.at("x_probs").get<std::vector<double>>();
    spec.groups = j.at("groups").get<std::vector<std::string>>();
    spec.group_probs = j.at("group_probs").get<std::vector<double>>();
    spec.cells.resize(spec.x_support.size() * spec.groups.size());
    std::vector<bool> seen(spec.cells.size(), false);
    for (const auto& c : j.at("cells")) {
      const auto xi = c.at("x_index").get<std::size_t>();
      if (xi >= spec.x_support.size())
        throw ValidationError("cell x_index " + std::to_string(xi) + " out of range");
      const auto gi = spec.group_index(c.at("group").get<std::string>());
      const std::size_t idx = xi * spec.groups.size() + gi;
      if (seen[idx]) throw ValidationError("duplicate cell in spec");
      seen[idx] = true;
      ResponseCell& q = spec.cells[idx];
      q.p00 = c.at("p00").get<double>();
      q.p01 = c.at("p01").get<double>();
      q.p10 = c.at("p10").get<double>();
      q.p11 = c.at("p11").get<double>();
      q.propensity = c.value("propensity", 0.5);
    }
    for (bool s : seen)
      if (!s) throw ValidationError("spec is missing a (x, group) cell");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline SyntheticSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spec file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("cannot parse spec file '" + path + "': " + e.what());
  }
  return spec_from_json(j);
}

inline void save_spec(const SyntheticSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file '" + path + "'");
  out << spec_to_json(spec).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Sampling

enum class ResponseType : std::uint8_t {
  kNever = 0,      // Y(0)=0, Y(1)=0
  kResponder = 1,  // Y(0)=0, Y(1)=1
  kAnti = 2,       // Y(0)=1, Y(1)=0
  kAlways = 3,     // Y(0)=1, Y(1)=1
};

/// A sampled dataset plus the latent bookkeeping tests need. The side
/// tables are parallel to the records and never serialized with them.
struct GeneratedData {
  Dataset data;
  std::vector<ResponseType> response_types;
  std::vector<std::size_t> x_index;
  std::vector<std::size_t> group_index;
};

/// Draws n i.i.d. units. Per unit the draw order is fixed (covariate,
/// group, response type, treatment), so a seed pins the whole dataset.
inline GeneratedData generate(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw ConfigError("cannot generate an empty dataset");
  Rng rng(seed);
  int width = 1;
  for (std::size_t v = n; v >= 10; v /= 10) ++width;

  GeneratedData out;
  std::vector<UnitRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t xi = rng.categorical(spec.x_probs);
    const std::size_t gi = rng.categorical(spec.group_probs);
    const auto& q = spec.cell(xi, gi);
    const auto type = static_cast<ResponseType>(
        rng.categorical({q.p00, q.p01, q.p10, q.p11}));
    const bool treated_arm = rng.bernoulli(q.propensity);
    const int y0 = (type == ResponseType::kAnti || type == ResponseType::kAlways) ? 1 : 0;
    const int y1 = (type == ResponseType::kResponder || type == ResponseType::kAlways) ? 1 : 0;

    UnitRecord r;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "u%0*zu", width > 20 ? 20 : width, i + 1);
    r.unit_id = buf;
    r.features = spec.x_support[xi];
    r.group = spec.groups[gi];
    r.treatment = treated_arm ? 1 : 0;
    r.outcome = treated_arm ? y1 : y0;
    records.push_back(std::move(r));
    out.response_types.push_back(type);
    out.x_index.push_back(xi);
    out.group_index.push_back(gi);
  }
  std::vector<std::string> names;
  for (std::size_t d = 0; d < spec.x_support.front().size(); ++d)
    names.push_back("x" + std::to_string(d + 1));
  out.data = Dataset(std::move(records), std::move(names));
  return out;
}

/// Copies the spec's implied observables onto the sampled records, giving
/// the external-score path population-exact mu0/mu1/tau.
inline Dataset attach_population_scores(const SyntheticSpec& spec, const GeneratedData& gen) {
  std::vector<UnitRecord> records = gen.data.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& q = spec.cell(gen.x_index[i], gen.group_index[i]);
    records[i].mu0_hat = q.mu0();
    records[i].mu1_hat = q.mu1();
    records[i].tau_hat = q.tau();
  }
  return Dataset(std::move(records), gen.data.feature_names());
}

// ---------------------------------------------------------------------------
// Exact population quantities

/// Per-cell policy flags, indexed like SyntheticSpec::cells.
using CellPolicy = std::vector<std::uint8_t>;

/// Z = 1[tau(x, a) >= theta] per cell.
inline CellPolicy threshold_cell_policy(const SyntheticSpec& spec, double theta) {
  CellPolicy z(spec.n_cells());
  for (std::size_t xi = 0; xi < spec.x_support.size(); ++xi)
    for (std::size_t gi = 0; gi < spec.groups.size(); ++gi)
      z[xi * spec.groups.size() + gi] = spec.cell(xi, gi).tau() >= theta ? 1 : 0;
  return z;
}

/// One group's cells as weighted observations (weights are P(x | group),
/// which is P(x) since X and A are independent in the spec).
inline std::vector<GroupObservation> population_observations(const SyntheticSpec& spec,
                                                             const CellPolicy& z,
                                                             const std::string& group) {
  if (z.size() != spec.n_cells())
    throw ValidationError("cell policy carries " + std::to_string(z.size()) +
                          " flags for " + std::to_string(spec.n_cells()) + " cells");
  const std::size_t gi = spec.group_index(group);
  std::vector<GroupObservation> obs;
  for (std::size_t xi = 0; xi < spec.x_support.size(); ++xi) {
    const auto& q = spec.cell(xi, gi);
    obs.push_back({q.tau(), q.mu0(), q.mu1(),
                   z[xi * spec.groups.size() + gi] != 0, spec.x_probs[xi]});
  }
  return obs;
}

struct TrueRates {
  double tpr = 0.0;
  double tnr = 0.0;
};

/// Exact rates by enumeration over the joint: the policy's coverage of
/// responder mass (p01) and avoidance of everyone else (1 - p01).
inline TrueRates true_rates(const SyntheticSpec& spec, const CellPolicy& z,
                            const std::string& group) {
  if (z.size() != spec.n_cells())
    throw ValidationError("cell policy carries " + std::to_string(z.size()) +
                          " flags for " + std::to_string(spec.n_cells()) + " cells");
  const std::size_t gi = spec.group_index(group);
  double resp = 0.0, resp_treated = 0.0, non = 0.0, non_untreated = 0.0;
  for (std::size_t xi = 0; xi < spec.x_support.size(); ++xi) {
    const auto& q = spec.cell(xi, gi);
    const double w = spec.x_probs[xi];
    const bool treated = z[xi * spec.groups.size() + gi] != 0;
    resp += w * q.p01;
    non += w * (1.0 - q.p01);
    if (treated) resp_treated += w * q.p01;
    if (!treated) non_untreated += w * (1.0 - q.p01);
  }
  constexpr double kMassGuard = 1e-12;
  if (resp < kMassGuard)
    throw DegenerateGroupError("group '" + group + "' has zero responder mass");
  if (non < kMassGuard)
    throw DegenerateGroupError("group '" + group + "' has zero non-responder mass");
  return {resp_treated / resp, non_untreated / non};
}

// ---------------------------------------------------------------------------
// Non-identifiability witness

/// Parameters for the witness pair: a single group, X in {0,1} uniform,
/// policy Z = 1[x = 1]. Both specs share the observables mu0/mu1; spec A
/// has no anti-responders, spec B moves `anti` mass into p10 per cell.
struct WitnessParams {
  std::array<double, 2> mu0 = {0.3, 0.3};
  std::array<double, 2> mu1 = {0.35, 0.6};
  std::array<double, 2> anti = {0.25, 0.0};
};

inline std::pair<SyntheticSpec, SyntheticSpec> nonidentifiability_witness(
    const WitnessParams& params = {}) {
  auto make = [&](bool with_anti) {
    SyntheticSpec s;
    s.x_support = {{0.0}, {1.0}};
    s.x_probs = {0.5, 0.5};
    s.groups = {"a"};
    s.group_probs = {1.0};
    for (int xi = 0; xi < 2; ++xi) {
      ResponseCell q;
      const double p10 = with_anti ? params.anti[xi] : 0.0;
      q.p10 = p10;
      q.p11 = params.mu0[xi] - p10;
      q.p01 = params.mu1[xi] - q.p11;
      q.p00 = 1.0 - q.p01 - q.p10 - q.p11;
      q.propensity = 0.5;
      s.cells.push_back(q);
    }
    s.validate();
    return s;
  };
  return {make(false), make(true)};
}

struct WitnessReport {
  double max_observable_discrepancy = 0.0;  // over implied P(X, A, T, Y) cells
  double tpr_a = 0.0;
  double tpr_b = 0.0;
  double gap = 0.0;
};

/// Enumerates both specs' implied (X, A, T, Y) joints cell by cell and the
/// diverging TPRs under Z = 1[x = 1].
inline WitnessReport verify_witness(const SyntheticSpec& sa, const SyntheticSpec& sb) {
  if (sa.x_support.size() != sb.x_support.size() || sa.groups.size() != sb.groups.size())
    throw ValidationError("witness specs have mismatched supports");
  WitnessReport rep;
  for (std::size_t xi = 0; xi < sa.x_support.size(); ++xi) {
    for (std::size_t gi = 0; gi < sa.groups.size(); ++gi) {
      const auto& qa = sa.cell(xi, gi);
      const auto& qb = sb.cell(xi, gi);
      const double base_a = sa.x_probs[xi] * sa.group_probs[gi];
      const double base_b = sb.x_probs[xi] * sb.group_probs[gi];
      for (int t = 0; t < 2; ++t) {
        const double pt_a = t ? qa.propensity : 1.0 - qa.propensity;
        const double pt_b = t ? qb.propensity : 1.0 - qb.propensity;
        const double y1_a = t ? qa.mu1() : qa.mu0();
        const double y1_b = t ? qb.mu1() : qb.mu0();
        for (int y = 0; y < 2; ++y) {
          const double pa = base_a * pt_a * (y ? y1_a : 1.0 - y1_a);
          const double pb = base_b * pt_b * (y ? y1_b : 1.0 - y1_b);
          rep.max_observable_discrepancy =
              std::max(rep.max_observable_discrepancy, std::fabs(pa - pb));
        }
      }
    }
  }
  const CellPolicy za = {0, 1};  // Z = 1[x = 1]
  rep.tpr_a = true_rates(sa, za, sa.groups[0]).tpr;
  rep.tpr_b = true_rates(sb, za, sb.groups[0]).tpr;
  rep.gap = std::fabs(rep.tpr_a - rep.tpr_b);
  return rep;
}

// ---------------------------------------------------------------------------
// Sharpness check

/// Result of brute-forcing the anti-responder profile over a grid and
/// comparing against the closed-form interval endpoints.
struct SharpnessReport {
  RateInterval closed_tpr;
  RateInterval closed_tnr;
  double grid_tpr_min = 0.0, grid_tpr_max = 0.0;
  double grid_tnr_min = 0.0, grid_tnr_max = 0.0;
  double max_endpoint_gap = 0.0;     // max |closed - grid| over the four endpoints
  double bang_bang_discrepancy = 0.0;  // closed forms vs rho() at saturated eta
  bool simultaneously_achieved = false;  // one eta attains both maxima (and one both minima)
  std::size_t points_scanned = 0;
  bool per_cell_grid = false;  // full per-cell enumeration vs arm-mean reduction

  bool pass(double grid_step) const {
    return max_endpoint_gap <= 2.0 * grid_step && bang_bang_discrepancy <= 1e-12 &&
           simultaneously_achieved;
  }
};

namespace detail {

struct ArmMeans {
  double e0 = 0.0;  // E[eta | Z=0]
  double e1 = 0.0;  // E[eta | Z=1]
};

/// Rates as a function of eta only through its per-arm conditional means.
struct SharpnessEvaluator {
  double r0 = 0.0, r1 = 0.0, tau0 = 0.0, tau1 = 0.0;

  PointRates eval(const ArmMeans& m) const {
    const double m0 = tau0 + m.e0, m1 = tau1 + m.e1;
    const double resp = m0 * r0 + m1 * r1;
    const double nonresp = (1.0 - m0) * r0 + (1.0 - m1) * r1;
    return {m1 * r1 / resp, (1.0 - m0) * r0 / nonresp};
  }
};

/// Grid values {0, step, 2*step, ...} with `hi` appended exactly.
inline std::vector<double> axis_grid(double hi, double step) {
  std::vector<double> v{0.0};
  if (hi <= 0.0) return v;
  for (double x = step; x < hi; x += step) v.push_back(x);
  v.push_back(hi);
  return v;
}

}  // namespace detail

/// Exhaustively scans anti-responder profiles for one group at budget B.
///
/// When the per-cell grid is small enough it enumerates every combination
/// of per-cell eta values. Otherwise it exploits that both rates depend on
/// eta only through the two per-arm conditional means, whose reachable set
/// is exactly the box [0, clip0] x [0, clip1], and grids that box at the
/// same step. Both paths include the interval endpoints as exact grid
/// points, so the bang-bang optima are scanned exactly.
inline SharpnessReport sharpness_check(const SyntheticSpec& spec, const CellPolicy& z,
                                       const std::string& group, double B,
                                       double grid_step,
                                       std::size_t max_combinations = 20'000'000) {
  if (spec.x_support.size() > 5)
    throw ConfigError("sharpness check requires |x_support| <= 5, got " +
                      std::to_string(spec.x_support.size()));
  if (!(grid_step > 0.0)) throw ConfigError("grid step must be positive");
  const auto obs = population_observations(spec, z, group);
  const auto gs = group_stats(obs, B, group);
  const auto closed = bounds(gs);

  detail::SharpnessEvaluator ev{gs.r0, gs.r1, gs.tau0, gs.tau1};

  SharpnessReport rep;
  rep.closed_tpr = closed.tpr;
  rep.closed_tnr = closed.tnr;

  double tpr_min = 2.0, tpr_max = -1.0, tnr_min = 2.0, tnr_max = -1.0;
  detail::ArmMeans arg_tpr_max, arg_tpr_min;
  std::size_t scanned = 0;
  auto consider = [&](const detail::ArmMeans& m) {
    const auto r = ev.eval(m);
    ++scanned;
    if (r.tpr > tpr_max) {
      tpr_max = r.tpr;
      arg_tpr_max = m;
    }
    if (r.tpr < tpr_min) {
      tpr_min = r.tpr;
      arg_tpr_min = m;
    }
    tnr_max = std::max(tnr_max, r.tnr);
    tnr_min = std::min(tnr_min, r.tnr);
  };

  // Weighted arm masses, for converting per-cell eta sums to means.
  double w_arm[2] = {0.0, 0.0};
  for (const auto& o : obs) w_arm[o.treated ? 1 : 0] += o.weight;

  std::vector<std::vector<double>> cell_grids;
  std::size_t combos = 1;
  bool tractable = true;
  for (const auto& o : obs) {
    cell_grids.push_back(detail::axis_grid(clip_value(B, o.mu0, o.mu1), grid_step));
    if (combos > max_combinations / cell_grids.back().size())
      tractable = false;
    else
      combos *= cell_grids.back().size();
  }

  if (tractable) {
    rep.per_cell_grid = true;
    // Depth-first over cells, carrying the weighted eta sums per arm.
    std::vector<std::size_t> idx(obs.size(), 0);
    std::vector<double> sum0(obs.size() + 1, 0.0), sum1(obs.size() + 1, 0.0);
    std::size_t d = 0;
    while (true) {
      if (d == obs.size()) {
        detail::ArmMeans m;
        m.e0 = w_arm[0] > 0.0 ? sum0[d] / w_arm[0] : 0.0;
        m.e1 = w_arm[1] > 0.0 ? sum1[d] / w_arm[1] : 0.0;
        consider(m);
        // Backtrack to the deepest cell with grid values left.
        while (d > 0 && idx[d - 1] + 1 == cell_grids[d - 1].size()) --d;
        if (d == 0) break;
        ++idx[d - 1];
        --d;
      } else {
        const double eta = cell_grids[d][idx[d]];
        const double add = obs[d].weight * eta;
        sum0[d + 1] = sum0[d] + (obs[d].treated ? 0.0 : add);
        sum1[d + 1] = sum1[d] + (obs[d].treated ? add : 0.0);
        ++d;
        if (d < obs.size()) idx[d] = 0;
      }
    }
  } else {
    // clip_z are exactly the box corners, so max arm means are hit exactly.
    const auto grid0 = detail::axis_grid(gs.clip0, grid_step);
    const auto grid1 = detail::axis_grid(gs.clip1, grid_step);
    for (double e0 : grid0)
      for (double e1 : grid1) consider({e0, e1});
  }
  rep.points_scanned = scanned;
  rep.grid_tpr_min = tpr_min;
  rep.grid_tpr_max = tpr_max;
  rep.grid_tnr_min = tnr_min;
  rep.grid_tnr_max = tnr_max;
  rep.max_endpoint_gap = std::max(
      {std::fabs(closed.tpr.lower - tpr_min), std::fabs(closed.tpr.upper - tpr_max),
       std::fabs(closed.tnr.lower - tnr_min), std::fabs(closed.tnr.upper - tnr_max)});

  // The profile maximizing TPR must also maximize TNR (both are the
  // saturate-treated-cells corner), and symmetrically for the minima.
  const double tnr_at_tpr_max = ev.eval(arg_tpr_max).tnr;
  const double tnr_at_tpr_min = ev.eval(arg_tpr_min).tnr;
  rep.simultaneously_achieved =
      std::fabs(tnr_at_tpr_max - tnr_max) <= 1e-12 && std::fabs(tnr_at_tpr_min - tnr_min) <= 1e-12;

  // Bang-bang profiles evaluated through rho() against the closed forms.
  std::vector<double> eta_hi(obs.size()), eta_lo(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double cap = clip_value(B, obs[i].mu0, obs[i].mu1);
    eta_hi[i] = obs[i].treated ? cap : 0.0;
    eta_lo[i] = obs[i].treated ? 0.0 : cap;
  }
  const auto hi = rho(obs, eta_hi, group);
  const auto lo = rho(obs, eta_lo, group);
  rep.bang_bang_discrepancy = std::max(
      {std::fabs(hi.tpr - closed.tpr.upper), std::fabs(hi.tnr - closed.tnr.upper),
       std::fabs(lo.tpr - closed.tpr.lower), std::fabs(lo.tnr - closed.tnr.lower)});
  return rep;
}

}  // namespace respaudit
