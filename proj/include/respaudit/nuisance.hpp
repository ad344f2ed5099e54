#pragma once

// Cross-fitted outcome-model estimation.
//
// Two built-in estimators score each unit with mu0_hat = P(Y=1 | arm 0)
// and mu1_hat = P(Y=1 | arm 1): exact frequency binning for discrete
// features, and a logistic T-learner fit by IRLS. Predictions for a unit
// use only parameters fit on the other folds. External scores bypass
// fitting entirely.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "respaudit/dataset.hpp"
#include "respaudit/errors.hpp"
#include "respaudit/rng.hpp"

namespace respaudit {

enum class EstimatorKind { kBinning, kLogistic, kExternal };

inline const char* estimator_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::kBinning: return "binning";
    case EstimatorKind::kLogistic: return "logistic";
    case EstimatorKind::kExternal: return "external";
  }
  return "?";
}

inline EstimatorKind parse_estimator(const std::string& s) {
  if (s == "binning") return EstimatorKind::kBinning;
  if (s == "logistic") return EstimatorKind::kLogistic;
  if (s == "external") return EstimatorKind::kExternal;
  throw ConfigError("unknown estimator '" + s + "' (expected binning|logistic|external)");
}

struct NuisanceConfig {
  EstimatorKind kind = EstimatorKind::kBinning;
  int n_folds = 2;
  std::uint64_t seed = 0;
  double epsilon = 1e-4;     // probability clip
  bool include_group = true;  // group label enters the feature set
  int irls_max_iter = 100;
  double irls_tol = 1e-8;
  double ridge = 1e-8;
};

/// Fitted state, kept for inspection; predictions are already written onto
/// the returned dataset.
struct NuisanceModel {
  EstimatorKind kind = EstimatorKind::kBinning;
  std::vector<int> fold_assignment;
  std::vector<std::string> warnings;
};

struct FitResult {
  Dataset data;  // scored copy of the input
  NuisanceModel model;
};

/// n_splits independent balanced n_folds-partitions of [0, n), pinned by
/// the seed.
inline std::vector<std::vector<int>> resplit_bootstrap(std::size_t n, int n_splits,
                                                       std::uint64_t seed, int n_folds = 2) {
  if (n_splits < 1) throw ConfigError("number of splits must be at least 1");
  if (n_folds < 2) throw ConfigError("number of folds must be at least 2");
  if (n < static_cast<std::size_t>(n_folds))
    throw ConfigError("cannot split " + std::to_string(n) + " records into " +
                      std::to_string(n_folds) + " folds");
  Rng rng(seed);
  std::vector<std::vector<int>> splits;
  splits.reserve(static_cast<std::size_t>(n_splits));
  std::vector<std::size_t> perm(n);
  for (int s = 0; s < n_splits; ++s) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<int> folds(n);
    for (std::size_t i = 0; i < n; ++i)
      folds[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
    splits.push_back(std::move(folds));
  }
  return splits;
}

inline std::vector<std::vector<int>> resplit_bootstrap(const Dataset& ds, int n_splits,
                                                       std::uint64_t seed, int n_folds = 2) {
  return resplit_bootstrap(ds.size(), n_splits, seed, n_folds);
}

namespace detail {

inline double clip_probability(double p, double eps) {
  return std::min(1.0 - eps, std::max(eps, p));
}

inline double sigmoid(double z) {
  const double c = std::min(40.0, std::max(-40.0, z));
  return 1.0 / (1.0 + std::exp(-c));
}

/// Gaussian elimination with partial pivoting; returns false on a
/// numerically singular system.
inline bool solve_linear(std::vector<std::vector<double>>& A, std::vector<double>& b) {
  const std::size_t d = b.size();
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::fabs(A[r][col]) > std::fabs(A[pivot][col])) pivot = r;
    if (std::fabs(A[pivot][col]) < 1e-12) return false;
    std::swap(A[col], A[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < d; ++r) {
      const double f = A[r][col] / A[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < d; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t col = d; col-- > 0;) {
    double acc = b[col];
    for (std::size_t c = col + 1; c < d; ++c) acc -= A[col][c] * b[c];
    b[col] = acc / A[col][col];
  }
  return true;
}

/// Design row: intercept, features, then group dummies (first group is the
/// reference level) when the group label is included.
inline void design_row(const UnitRecord& r, const std::vector<std::string>& groups,
                       bool include_group, std::vector<double>& row) {
  row.clear();
  row.push_back(1.0);
  for (double x : r.features) row.push_back(x);
  if (include_group && groups.size() > 1) {
    for (std::size_t g = 1; g < groups.size(); ++g)
      row.push_back(r.group == groups[g] ? 1.0 : 0.0);
  }
}

struct LogisticFit {
  std::vector<double> beta;  // empty when fallen back to a constant
  double constant = 0.5;
  bool converged = false;
  int iterations = 0;
};

inline LogisticFit fit_logistic_irls(const std::vector<std::vector<double>>& rows,
                                     const std::vector<int>& ys, const NuisanceConfig& cfg,
                                     std::string* failure) {
  LogisticFit fit;
  const std::size_t n = rows.size();
  const std::size_t d = rows.front().size();
  std::vector<double> beta(d, 0.0);
  std::vector<std::vector<double>> A(d, std::vector<double>(d, 0.0));
  std::vector<double> rhs(d, 0.0);
  for (int iter = 0; iter < cfg.irls_max_iter; ++iter) {
    for (auto& r : A) std::fill(r.begin(), r.end(), 0.0);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0.0;
      for (std::size_t k = 0; k < d; ++k) z += beta[k] * rows[i][k];
      const double p = sigmoid(z);
      const double w = std::max(p * (1.0 - p), 1e-10);
      const double target = z + (static_cast<double>(ys[i]) - p) / w;
      for (std::size_t k = 0; k < d; ++k) {
        const double wx = w * rows[i][k];
        rhs[k] += wx * target;
        for (std::size_t l = k; l < d; ++l) A[k][l] += wx * rows[i][l];
      }
    }
    for (std::size_t k = 0; k < d; ++k) {
      A[k][k] += cfg.ridge;
      for (std::size_t l = 0; l < k; ++l) A[k][l] = A[l][k];
    }
    std::vector<double> next = rhs;
    if (!solve_linear(A, next)) {
      if (failure) *failure = "singular design";
      return fit;
    }
    double delta = 0.0;
    for (std::size_t k = 0; k < d; ++k) delta = std::max(delta, std::fabs(next[k] - beta[k]));
    beta = std::move(next);
    fit.iterations = iter + 1;
    if (delta <= cfg.irls_tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    if (failure) *failure = "no convergence after " +
                            std::to_string(cfg.irls_max_iter) + " iterations";
    return fit;
  }
  fit.beta = std::move(beta);
  return fit;
}

}  // namespace detail

/// Fits the configured estimator with the given fold assignment and
/// returns a scored copy of the dataset. Folds must number cfg.n_folds
/// with every fold nonempty.
inline FitResult fit_predict(const Dataset& ds, const NuisanceConfig& cfg,
                             std::span<const int> folds) {
  if (ds.size() == 0) throw ValidationError("cannot fit on an empty dataset");
  std::vector<UnitRecord> records = ds.records();

  if (cfg.kind == EstimatorKind::kExternal) {
    for (const auto& r : records)
      if (!r.mu0_hat || !r.mu1_hat)
        throw ConfigError("external estimator requires mu0/mu1 scores on every record; "
                          "unit '" + r.unit_id + "' has none");
    for (auto& r : records)
      if (!r.tau_hat) r.tau_hat = *r.mu1_hat - *r.mu0_hat;
    FitResult res;
    res.data = Dataset(std::move(records), ds.feature_names());
    res.model.kind = cfg.kind;
    return res;
  }

  if (folds.size() != ds.size())
    throw ValidationError("fold assignment carries " + std::to_string(folds.size()) +
                          " entries for " + std::to_string(ds.size()) + " records");
  if (cfg.n_folds < 2) throw ConfigError("number of folds must be at least 2");
  std::vector<std::size_t> fold_count(static_cast<std::size_t>(cfg.n_folds), 0);
  for (int f : folds) {
    if (f < 0 || f >= cfg.n_folds)
      throw ValidationError("fold index " + std::to_string(f) + " outside [0, " +
                            std::to_string(cfg.n_folds) + ")");
    ++fold_count[static_cast<std::size_t>(f)];
  }
  for (int f = 0; f < cfg.n_folds; ++f)
    if (fold_count[static_cast<std::size_t>(f)] == 0)
      throw ValidationError("fold " + std::to_string(f) + " is empty");

  FitResult res;
  res.model.kind = cfg.kind;
  res.model.fold_assignment.assign(folds.begin(), folds.end());

  if (cfg.kind == EstimatorKind::kBinning) {
    // Cell key: the exact feature vector, plus the group label unless
    // pooled. Per (fold, arm), training cells hold exact outcome means.
    using Key = std::pair<std::vector<double>, std::string>;
    for (int fold = 0; fold < cfg.n_folds; ++fold) {
      std::array<std::map<Key, std::pair<double, std::size_t>>, 2> table;
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (folds[i] == fold) continue;
        const auto& r = records[i];
        Key key{r.features, cfg.include_group ? r.group : std::string()};
        auto& cell = table[static_cast<std::size_t>(r.treatment)][std::move(key)];
        cell.first += static_cast<double>(r.outcome);
        cell.second += 1;
      }
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (folds[i] != fold) continue;
        auto& r = records[i];
        double mu[2];
        for (int arm = 0; arm < 2; ++arm) {
          Key key{r.features, cfg.include_group ? r.group : std::string()};
          const auto it = table[static_cast<std::size_t>(arm)].find(key);
          if (it == table[static_cast<std::size_t>(arm)].end()) {
            std::string cell_desc;
            for (double x : r.features)
              cell_desc += (cell_desc.empty() ? "" : ",") + std::to_string(x);
            throw EstimationError(
                "empty training cell: no arm-" + std::to_string(arm) +
                " records outside fold " + std::to_string(fold) + " match features (" +
                cell_desc + (cfg.include_group ? ") in group '" + r.group + "'" : ")"));
          }
          mu[arm] = detail::clip_probability(
              it->second.first / static_cast<double>(it->second.second), cfg.epsilon);
        }
        r.mu0_hat = mu[0];
        r.mu1_hat = mu[1];
        r.tau_hat = mu[1] - mu[0];
      }
    }
  } else {
    // Logistic T-learner: one IRLS fit per (fold, arm) on the complement.
    std::vector<double> row;
    for (int fold = 0; fold < cfg.n_folds; ++fold) {
      std::array<detail::LogisticFit, 2> fits;
      for (int arm = 0; arm < 2; ++arm) {
        std::vector<std::vector<double>> rows;
        std::vector<int> ys;
        for (std::size_t i = 0; i < records.size(); ++i) {
          if (folds[i] == fold || records[i].treatment != arm) continue;
          detail::design_row(records[i], ds.groups(), cfg.include_group, row);
          rows.push_back(row);
          ys.push_back(records[i].outcome);
        }
        if (rows.empty())
          throw EstimationError("empty training cell: no arm-" + std::to_string(arm) +
                                " records outside fold " + std::to_string(fold));
        std::string failure;
        fits[static_cast<std::size_t>(arm)] =
            detail::fit_logistic_irls(rows, ys, cfg, &failure);
        if (!fits[static_cast<std::size_t>(arm)].converged) {
          double mean = 0.0;
          for (int y : ys) mean += static_cast<double>(y);
          mean /= static_cast<double>(ys.size());
          fits[static_cast<std::size_t>(arm)].constant =
              detail::clip_probability(mean, cfg.epsilon);
          res.model.warnings.push_back(
              "fold " + std::to_string(fold) + " arm " + std::to_string(arm) +
              ": IRLS " + failure + "; using an intercept-only fit");
        }
      }
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (folds[i] != fold) continue;
        auto& r = records[i];
        double mu[2];
        for (int arm = 0; arm < 2; ++arm) {
          const auto& fit = fits[static_cast<std::size_t>(arm)];
          if (fit.beta.empty()) {
            mu[arm] = fit.constant;
          } else {
            detail::design_row(r, ds.groups(), cfg.include_group, row);
            double z = 0.0;
            for (std::size_t k = 0; k < row.size(); ++k) z += fit.beta[k] * row[k];
            mu[arm] = detail::clip_probability(detail::sigmoid(z), cfg.epsilon);
          }
        }
        r.mu0_hat = mu[0];
        r.mu1_hat = mu[1];
        r.tau_hat = mu[1] - mu[0];
      }
    }
  }

  res.data = Dataset(std::move(records), ds.feature_names());
  return res;
}

/// Default fold assignment: the first split drawn from the seed.
inline FitResult fit_predict(const Dataset& ds, const NuisanceConfig& cfg) {
  if (cfg.kind == EstimatorKind::kExternal) return fit_predict(ds, cfg, {});
  const auto splits = resplit_bootstrap(ds.size(), 1, cfg.seed, cfg.n_folds);
  return fit_predict(ds, cfg, splits.front());
}

/// Spec-shaped convenience overload.
inline FitResult fit_predict(const Dataset& ds, EstimatorKind kind, int n_folds,
                             std::uint64_t seed) {
  NuisanceConfig cfg;
  cfg.kind = kind;
  cfg.n_folds = n_folds;
  cfg.seed = seed;
  return fit_predict(ds, cfg);
}

}  // namespace respaudit
