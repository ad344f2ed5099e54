#pragma once

// End-to-end audit orchestration: nuisance fitting over bootstrap resplits,
// threshold policy application, interval reports per group and budget,
// pairwise disparity extremes and curves, deterministic output files.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "respaudit/curves.hpp"
#include "respaudit/dataset.hpp"
#include "respaudit/errors.hpp"
#include "respaudit/identification.hpp"
#include "respaudit/io.hpp"
#include "respaudit/nuisance.hpp"
#include "respaudit/report.hpp"
#include "respaudit/svg.hpp"

namespace respaudit {

struct AuditConfig {
  std::string input_path;
  ColumnSchema schema;
  EstimatorKind estimator = EstimatorKind::kBinning;
  int n_folds = 2;
  int n_splits = 1;
  std::uint64_t seed = 0;
  std::vector<double> budgets = {0.0, 0.02, 0.05, 0.1, 0.2};
  std::vector<std::string> groups;  // empty = every group in the data
  double theta = 0.0;
  std::string out_dir = ".";
  bool plot = false;
  double epsilon = 1e-4;
  bool include_group = true;

  void validate() const {
    if (budgets.empty()) throw ConfigError("budget list is empty");
    double prev = -1.0;
    for (double b : budgets) {
      if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("budget out of [0,1]");
      if (b <= prev) throw ConfigError("budget list must be strictly ascending");
      prev = b;
    }
    if (n_splits < 1) throw ConfigError("n_splits must be at least 1");
    if (n_folds < 2) throw ConfigError("n_folds must be at least 2");
    if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
    if (out_dir.empty()) throw ConfigError("output directory is empty");
  }

  NuisanceConfig nuisance() const {
    NuisanceConfig n;
    n.kind = estimator;
    n.n_folds = n_folds;
    n.seed = seed;
    n.epsilon = epsilon;
    n.include_group = include_group;
    return n;
  }
};

struct AuditArtifacts {
  ordered_json report;
  std::vector<std::string> files;  // written paths, report first
};

namespace detail {

inline std::string format_budget(double b) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", b);
  return buf;
}

inline std::string safe_name(const std::string& s) {
  std::string out = s.empty() ? std::string("_") : s;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-')) c = '_';
  return out;
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline std::vector<std::string> resolve_groups(const Dataset& ds,
                                               const std::vector<std::string>& wanted) {
  if (wanted.empty()) return ds.groups();
  std::vector<std::string> out;
  for (const auto& g : wanted) {
    if (!ds.has_group(g)) throw ConfigError("unknown group '" + g + "'");
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  return out;
}

struct SplitFit {
  Dataset data;
  std::vector<std::uint8_t> assignment;
};

/// Scores the data once per resplit and applies the threshold policy.
/// External scores are fixed, so resampling is a no-op and one split is run.
inline std::vector<SplitFit> split_fits(const Dataset& ds, const AuditConfig& cfg,
                                        int& splits_used,
                                        std::vector<std::string>& warnings) {
  const bool external = cfg.estimator == EstimatorKind::kExternal;
  splits_used = external ? 1 : cfg.n_splits;
  if (external && cfg.n_splits > 1)
    warnings.push_back("external scores are fixed; resampling disabled (1 split used)");
  std::vector<std::vector<int>> folds;
  if (!external) folds = resplit_bootstrap(ds.size(), splits_used, cfg.seed, cfg.n_folds);
  const auto ncfg = cfg.nuisance();
  const Policy policy = Policy::threshold(cfg.theta);
  std::vector<SplitFit> out;
  out.reserve(static_cast<std::size_t>(splits_used));
  for (int s = 0; s < splits_used; ++s) {
    FitResult fr = external ? fit_predict(ds, ncfg, {})
                            : fit_predict(ds, ncfg, folds[static_cast<std::size_t>(s)]);
    for (const auto& w : fr.model.warnings)
      warnings.push_back("split " + std::to_string(s) + ": " + w);
    const double neg = negative_tau_fraction(fr.data);
    if (neg > 0.05) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "split %d: %.1f%% of tau_hat estimates are negative",
                    s, 100.0 * neg);
      warnings.push_back(buf);
    }
    auto z = apply_policy(fr.data, policy);
    out.push_back({std::move(fr.data), std::move(z)});
  }
  return out;
}

inline ordered_json config_json(const AuditConfig& cfg,
                                const std::vector<std::string>& groups, int splits_used) {
  ordered_json j;
  j["input"] = cfg.input_path;
  j["estimator"] = estimator_name(cfg.estimator);
  j["n_folds"] = cfg.n_folds;
  j["n_splits"] = cfg.n_splits;
  j["n_splits_used"] = splits_used;
  j["seed"] = cfg.seed;
  j["theta"] = cfg.theta;
  j["B"] = cfg.budgets;
  j["groups"] = groups;
  j["epsilon"] = cfg.epsilon;
  j["include_group"] = cfg.include_group;
  return j;
}

}  // namespace detail

/// Full audit: per-split scoring, per-group point rates and intervals at
/// each budget (averaged over splits), pairwise disparity extremes, and
/// averaged disparity-curve CSVs. Writes report.json plus band files.
inline AuditArtifacts run_audit(const Dataset& ds, const AuditConfig& cfg) {
  cfg.validate();
  const auto groups = detail::resolve_groups(ds, cfg.groups);
  std::vector<std::string> warnings;
  int splits_used = 0;
  const auto fits = detail::split_fits(ds, cfg, splits_used, warnings);
  const std::size_t nb = cfg.budgets.size();
  const auto n_used = static_cast<double>(fits.size());

  struct Cell {
    double tpr_lo = 0, tpr_hi = 0, tnr_lo = 0, tnr_hi = 0, point_tpr = 0, point_tnr = 0;
    bool degenerate = false;
    std::string reason;
  };
  struct PairCell {
    double lower = 0, upper = 0;
    bool degenerate = false;
    std::string reason;
  };
  std::vector<std::vector<Cell>> cells(groups.size(), std::vector<Cell>(nb));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j) pairs.emplace_back(i, j);
  std::vector<std::array<std::vector<PairCell>, 2>> pair_cells(
      pairs.size(), std::array<std::vector<PairCell>, 2>{std::vector<PairCell>(nb),
                                                         std::vector<PairCell>(nb)});
  // pair x metric x budget -> one band per split, averaged at the end
  std::vector<std::array<std::vector<std::vector<CurveBand>>, 2>> pair_bands(
      pairs.size(), std::array<std::vector<std::vector<CurveBand>>, 2>{
                        std::vector<std::vector<CurveBand>>(nb),
                        std::vector<std::vector<CurveBand>>(nb)});
  constexpr std::array<Metric, 2> kMetrics = {Metric::kTpr, Metric::kTnr};

  for (const auto& sf : fits) {
    std::vector<std::vector<GroupObservation>> obs;
    obs.reserve(groups.size());
    for (const auto& g : groups) obs.push_back(collect_group(sf.data, sf.assignment, g));
    std::vector<std::vector<GroupStats>> stats(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      stats[gi].reserve(nb);
      for (double b : cfg.budgets) stats[gi].push_back(group_stats(obs[gi], b, groups[gi]));
      for (std::size_t bi = 0; bi < nb; ++bi) {
        Cell& c = cells[gi][bi];
        if (c.degenerate) continue;
        try {
          const auto pr = point_rates(stats[gi][bi]);
          const auto rb = bounds(stats[gi][bi]);
          c.point_tpr += pr.tpr;
          c.point_tnr += pr.tnr;
          c.tpr_lo += rb.tpr.lower;
          c.tpr_hi += rb.tpr.upper;
          c.tnr_lo += rb.tnr.lower;
          c.tnr_hi += rb.tnr.upper;
        } catch (const DegenerateGroupError& e) {
          c.degenerate = true;
          c.reason = e.what();
        }
      }
    }
    const auto thresholds = default_thresholds(sf.data);
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      const auto [ia, ib] = pairs[pi];
      for (std::size_t mi = 0; mi < kMetrics.size(); ++mi) {
        for (std::size_t bi = 0; bi < nb; ++bi) {
          PairCell& pc = pair_cells[pi][mi][bi];
          if (!pc.degenerate) {
            try {
              const auto di =
                  disparity_extremes(stats[ia][bi], stats[ib][bi], kMetrics[mi]);
              pc.lower += di.lower;
              pc.upper += di.upper;
            } catch (const DegenerateGroupError& e) {
              pc.degenerate = true;
              pc.reason = e.what();
            }
          }
          pair_bands[pi][mi][bi].push_back(disparity_curve(obs[ia], obs[ib], groups[ia],
                                                           groups[ib], kMetrics[mi],
                                                           cfg.budgets[bi], thresholds));
        }
      }
    }
  }

  ordered_json report;
  report["tool"] = "respaudit";
  report["command"] = "audit";
  report["config"] = detail::config_json(cfg, groups, splits_used);
  report["n_units"] = ds.size();
  report["warnings"] = warnings;
  report["groups"] = ordered_json::array();
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    ordered_json gj;
    gj["group"] = groups[gi];
    gj["intervals"] = ordered_json::array();
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const Cell& c = cells[gi][bi];
      const double b = cfg.budgets[bi];
      if (c.degenerate) {
        gj["intervals"].push_back(degenerate_fragment(groups[gi], b, c.reason));
      } else {
        const RateBounds rb{{Metric::kTpr, groups[gi], b, c.tpr_lo / n_used, c.tpr_hi / n_used},
                            {Metric::kTnr, groups[gi], b, c.tnr_lo / n_used, c.tnr_hi / n_used},
                            true};
        const PointRates pr{c.point_tpr / n_used, c.point_tnr / n_used};
        gj["intervals"].push_back(interval_fragment(groups[gi], b, rb, pr));
      }
    }
    report["groups"].push_back(std::move(gj));
  }
  report["disparities"] = ordered_json::array();
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto [ia, ib] = pairs[pi];
    for (std::size_t mi = 0; mi < kMetrics.size(); ++mi) {
      ordered_json dj;
      dj["group_a"] = groups[ia];
      dj["group_b"] = groups[ib];
      dj["metric"] = metric_name(kMetrics[mi]);
      dj["intervals"] = ordered_json::array();
      for (std::size_t bi = 0; bi < nb; ++bi) {
        const PairCell& pc = pair_cells[pi][mi][bi];
        ordered_json ij;
        ij["B"] = cfg.budgets[bi];
        if (pc.degenerate) {
          ij["lower"] = nullptr;
          ij["upper"] = nullptr;
          ij["degenerate"] = true;
          ij["reason"] = pc.reason;
        } else {
          ij["lower"] = pc.lower / n_used;
          ij["upper"] = pc.upper / n_used;
          ij["degenerate"] = false;
        }
        dj["intervals"].push_back(std::move(ij));
      }
      report["disparities"].push_back(std::move(dj));
    }
  }

  std::filesystem::create_directories(cfg.out_dir);
  AuditArtifacts art;
  const std::string report_path = detail::join_path(cfg.out_dir, "report.json");
  write_json(report, report_path);
  art.files.push_back(report_path);
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto [ia, ib] = pairs[pi];
    const std::string stem =
        detail::safe_name(groups[ia]) + "_vs_" + detail::safe_name(groups[ib]);
    for (std::size_t mi = 0; mi < kMetrics.size(); ++mi) {
      std::vector<CurveBand> averaged;
      averaged.reserve(nb);
      for (std::size_t bi = 0; bi < nb; ++bi)
        averaged.push_back(average_bands(pair_bands[pi][mi][bi]));
      const std::string metric = metric_name(kMetrics[mi]);
      for (std::size_t bi = 0; bi < nb; ++bi) {
        const std::string name = "disparity_" + metric + "_" + stem + "_B" +
                                 detail::format_budget(cfg.budgets[bi]) + ".csv";
        const std::string path = detail::join_path(cfg.out_dir, name);
        write_band_csv(averaged[bi], path);
        art.files.push_back(path);
      }
      if (cfg.plot) {
        const std::string path =
            detail::join_path(cfg.out_dir, "disparity_" + metric + "_" + stem + ".svg");
        write_band_svg(averaged,
                       (kMetrics[mi] == Metric::kTpr ? "TPR" : "TNR") +
                           std::string(" disparity: ") + groups[ia] + " vs " + groups[ib],
                       "threshold", "disparity", path);
        art.files.push_back(path);
      }
    }
  }
  art.report = std::move(report);
  return art;
}

/// Curve bands (ROC, xROC, disparity) averaged over resplits, written as
/// CSVs plus a summary JSON with xAUC intervals and the gap inventory.
inline AuditArtifacts run_curves(const Dataset& ds, const AuditConfig& cfg,
                                 std::vector<CurveKind> kinds) {
  cfg.validate();
  if (kinds.empty())
    kinds = {CurveKind::kRoc, CurveKind::kXroc, CurveKind::kTprDisparity,
             CurveKind::kTnrDisparity};
  const auto groups = detail::resolve_groups(ds, cfg.groups);
  for (CurveKind k : kinds)
    if (k != CurveKind::kRoc && groups.size() < 2)
      throw ConfigError(std::string("curve kind '") + curve_kind_name(k) +
                        "' needs at least two groups");

  std::vector<std::string> warnings;
  int splits_used = 0;
  const auto fits = detail::split_fits(ds, cfg, splits_used, warnings);
  const std::size_t nb = cfg.budgets.size();

  // Task = one (kind, target) pair plotted across all budgets.
  struct Task {
    CurveKind kind;
    std::size_t a = 0, b = 0;  // group indices; b unused for ROC
  };
  std::vector<Task> tasks;
  for (CurveKind k : kinds) {
    if (k == CurveKind::kRoc) {
      for (std::size_t i = 0; i < groups.size(); ++i) tasks.push_back({k, i, i});
    } else if (k == CurveKind::kXroc) {
      for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = 0; j < groups.size(); ++j)
          if (i != j) tasks.push_back({k, i, j});
    } else {
      for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j) tasks.push_back({k, i, j});
    }
  }

  std::vector<std::vector<std::vector<CurveBand>>> bands(
      tasks.size(), std::vector<std::vector<CurveBand>>(nb));
  for (const auto& sf : fits) {
    std::vector<std::vector<GroupObservation>> obs;
    obs.reserve(groups.size());
    for (const auto& g : groups) obs.push_back(collect_group(sf.data, sf.assignment, g));
    const auto thresholds = default_thresholds(sf.data);
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      const Task& t = tasks[ti];
      for (std::size_t bi = 0; bi < nb; ++bi) {
        const double b = cfg.budgets[bi];
        CurveBand band;
        switch (t.kind) {
          case CurveKind::kRoc:
            band = robust_roc(obs[t.a], groups[t.a], b, thresholds);
            break;
          case CurveKind::kXroc:
            band = robust_xroc(obs[t.a], obs[t.b], groups[t.a], groups[t.b], b, thresholds);
            break;
          case CurveKind::kTprDisparity:
            band = disparity_curve(obs[t.a], obs[t.b], groups[t.a], groups[t.b],
                                   Metric::kTpr, b, thresholds);
            break;
          case CurveKind::kTnrDisparity:
            band = disparity_curve(obs[t.a], obs[t.b], groups[t.a], groups[t.b],
                                   Metric::kTnr, b, thresholds);
            break;
        }
        bands[ti][bi].push_back(std::move(band));
      }
    }
  }

  std::filesystem::create_directories(cfg.out_dir);
  AuditArtifacts art;
  ordered_json report;
  report["tool"] = "respaudit";
  report["command"] = "curves";
  report["config"] = detail::config_json(cfg, groups, splits_used);
  ordered_json kinds_j = ordered_json::array();
  for (CurveKind k : kinds) kinds_j.push_back(curve_kind_name(k));
  report["config"]["kinds"] = std::move(kinds_j);
  report["n_units"] = ds.size();
  report["warnings"] = warnings;
  ordered_json files_j = ordered_json::array();
  ordered_json xauc_j = ordered_json::array();
  ordered_json gaps_j = ordered_json::array();

  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    const Task& t = tasks[ti];
    std::string stem;
    std::string title, x_label, y_label;
    switch (t.kind) {
      case CurveKind::kRoc:
        stem = "roc_" + detail::safe_name(groups[t.a]);
        title = "ROC band: " + groups[t.a];
        x_label = "false positive rate";
        y_label = "true positive rate";
        break;
      case CurveKind::kXroc:
        stem = "xroc_" + detail::safe_name(groups[t.a]) + "_vs_" +
               detail::safe_name(groups[t.b]);
        title = "xROC band: TPR " + groups[t.a] + " vs FPR " + groups[t.b];
        x_label = "false positive rate (" + groups[t.b] + ")";
        y_label = "true positive rate (" + groups[t.a] + ")";
        break;
      case CurveKind::kTprDisparity:
      case CurveKind::kTnrDisparity: {
        const char* m = t.kind == CurveKind::kTprDisparity ? "tpr" : "tnr";
        stem = std::string("disparity_") + m + "_" + detail::safe_name(groups[t.a]) +
               "_vs_" + detail::safe_name(groups[t.b]);
        title = std::string(t.kind == CurveKind::kTprDisparity ? "TPR" : "TNR") +
                " disparity: " + groups[t.a] + " vs " + groups[t.b];
        x_label = "threshold";
        y_label = "disparity";
        break;
      }
    }
    std::vector<CurveBand> averaged;
    averaged.reserve(nb);
    for (std::size_t bi = 0; bi < nb; ++bi) averaged.push_back(average_bands(bands[ti][bi]));
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const CurveBand& band = averaged[bi];
      const std::string name = stem + "_B" + detail::format_budget(band.B) + ".csv";
      const std::string path = detail::join_path(cfg.out_dir, name);
      write_band_csv(band, path);
      art.files.push_back(path);
      files_j.push_back(name);
      if (t.kind == CurveKind::kRoc || t.kind == CurveKind::kXroc) {
        ordered_json xj;
        xj["kind"] = curve_kind_name(t.kind);
        xj["group_a"] = groups[t.a];
        if (t.kind == CurveKind::kXroc) xj["group_b"] = groups[t.b];
        xj["B"] = band.B;
        try {
          const auto [lo, hi] = xauc_bounds(band);
          xj["lower"] = lo;
          xj["upper"] = hi;
        } catch (const AuditError& e) {
          xj["error"] = e.what();
        }
        xauc_j.push_back(std::move(xj));
      }
      if (band.n_gaps() > 0) {
        ordered_json gj;
        gj["file"] = name;
        gj["kind"] = curve_kind_name(t.kind);
        gj["group_a"] = groups[t.a];
        if (t.kind != CurveKind::kRoc) gj["group_b"] = groups[t.b];
        gj["B"] = band.B;
        gj["gaps"] = ordered_json::array();
        for (std::size_t i = 0; i < band.size(); ++i)
          if (band.gap[i])
            gj["gaps"].push_back(
                {{"theta", band.thresholds[i]}, {"reason", band.gap_reason[i]}});
        gaps_j.push_back(std::move(gj));
      }
    }
    if (cfg.plot) {
      const std::string path = detail::join_path(cfg.out_dir, stem + ".svg");
      write_band_svg(averaged, title, x_label, y_label, path);
      art.files.push_back(path);
      files_j.push_back(stem + ".svg");
    }
  }

  report["files"] = std::move(files_j);
  report["xauc"] = std::move(xauc_j);
  report["gaps"] = std::move(gaps_j);
  const std::string report_path = detail::join_path(cfg.out_dir, "curves_report.json");
  write_json(report, report_path);
  art.files.insert(art.files.begin(), report_path);
  art.report = std::move(report);
  return art;
}

}  // namespace respaudit
