#pragma once

// Command-line surface: audit, curves, simulate, support, demo-nonid.
// Exit codes: 0 success, 2 configuration or usage errors, 1 runtime errors.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "respaudit/audit.hpp"
#include "respaudit/dataset.hpp"
#include "respaudit/errors.hpp"
#include "respaudit/io.hpp"
#include "respaudit/support.hpp"
#include "respaudit/synthetic.hpp"

namespace respaudit {
namespace detail {

inline CurveKind parse_curve_kind(const std::string& s) {
  if (s == "roc") return CurveKind::kRoc;
  if (s == "xroc") return CurveKind::kXroc;
  if (s == "tpr_disparity") return CurveKind::kTprDisparity;
  if (s == "tnr_disparity") return CurveKind::kTnrDisparity;
  throw ConfigError("unknown curve kind '" + s +
                    "' (expected roc|xroc|tpr_disparity|tnr_disparity)");
}

/// "group:tpr_coef:tnr_coef[,group:tpr_coef:tnr_coef...]"
inline ContrastDirection parse_contrast(const std::string& s) {
  ContrastDirection mu;
  for (const auto& entry : split_fields(s, ',')) {
    if (entry.empty()) throw ConfigError("empty contrast entry in '" + s + "'");
    const auto parts = split_fields(entry, ':');
    if (parts.size() < 3)
      throw ConfigError("contrast entry '" + entry + "' is not group:tpr:tnr");
    const auto tpr = parse_double(parts[parts.size() - 2]);
    const auto tnr = parse_double(parts[parts.size() - 1]);
    if (!tpr || !tnr)
      throw ConfigError("contrast entry '" + entry + "' has non-numeric coefficients");
    std::string group = parts[0];
    for (std::size_t i = 1; i + 2 < parts.size(); ++i) group += ":" + parts[i];
    mu.entries.push_back({group, *tpr, *tnr});
  }
  mu.validate();
  return mu;
}

struct CliOptions {
  AuditConfig cfg;
  std::string delimiter = ",";
  std::vector<std::string> kinds;
  std::string spec_path;
  std::string sim_out;
  std::size_t sim_n = 1000;
  bool sim_scores = false;
  std::string mu_arg;
  double support_b = 0.0;
  int grid_n = 1001;
  std::string json_out;
  std::string demo_out;
};

inline void add_schema_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--id-col", o.cfg.schema.id, "unit id column")->capture_default_str();
  cmd->add_option("--group-col", o.cfg.schema.group, "group label column")
      ->capture_default_str();
  cmd->add_option("--treatment-col", o.cfg.schema.treatment, "treatment arm column")
      ->capture_default_str();
  cmd->add_option("--outcome-col", o.cfg.schema.outcome, "outcome column")
      ->capture_default_str();
  cmd->add_option("--mu0-col", o.cfg.schema.mu0, "control score column")
      ->capture_default_str();
  cmd->add_option("--mu1-col", o.cfg.schema.mu1, "treated score column")
      ->capture_default_str();
  cmd->add_option("--tau-col", o.cfg.schema.tau, "effect score column")
      ->capture_default_str();
  cmd->add_option("--exclude", o.cfg.schema.exclude, "columns to drop");
  cmd->add_option("--delimiter", o.delimiter, "field delimiter")->capture_default_str();
}

inline void add_fit_flags(CLI::App* cmd, CliOptions& o, std::string& estimator) {
  cmd->add_option("--estimator", estimator, "binning|logistic|external")
      ->capture_default_str();
  cmd->add_option("--folds", o.cfg.n_folds, "cross-fitting folds")->capture_default_str();
  cmd->add_option("--seed", o.cfg.seed, "random seed")->capture_default_str();
  cmd->add_option("--epsilon", o.cfg.epsilon, "score clipping floor")
      ->capture_default_str();
  cmd->add_flag("!--no-group-feature", o.cfg.include_group,
                "drop the group label from the learner design");
}

inline void finish_config(CliOptions& o, const std::string& estimator) {
  if (o.delimiter.size() != 1)
    throw ConfigError("delimiter must be a single character, got '" + o.delimiter + "'");
  o.cfg.schema.delimiter = o.delimiter[0];
  o.cfg.estimator = parse_estimator(estimator);
}

inline void print_files(const AuditArtifacts& art) {
  for (const auto& f : art.files) std::cout << "wrote " << f << '\n';
}

inline std::string format_point(const std::vector<double>& x) {
  std::string out;
  for (double v : x) {
    if (!out.empty()) out += ',';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    out += buf;
  }
  return out;
}

inline int cmd_demo_nonid(const CliOptions& o) {
  const auto [sa, sb] = nonidentifiability_witness();
  const auto rep = verify_witness(sa, sb);
  char buf[256];
  std::cout << "Two populations, identical observable law, different responder rates\n\n";
  std::cout << "shared observables per covariate cell (propensity 0.5):\n";
  std::cout << "  x    P(Y=1|T=0)  P(Y=1|T=1)  tau\n";
  for (std::size_t xi = 0; xi < sa.x_support.size(); ++xi) {
    const auto& c = sa.cell(xi, 0);
    std::snprintf(buf, sizeof(buf), "  %-4s %-11g %-11g %g\n",
                  format_point(sa.x_support[xi]).c_str(), c.mu0(), c.mu1(), c.tau());
    std::cout << buf;
  }
  std::cout << "\nhidden response types (responder p01 / anti-responder p10):\n";
  std::cout << "  x    population A     population B\n";
  for (std::size_t xi = 0; xi < sa.x_support.size(); ++xi) {
    const auto& ca = sa.cell(xi, 0);
    const auto& cb = sb.cell(xi, 0);
    std::snprintf(buf, sizeof(buf), "  %-4s %.2f / %.2f      %.2f / %.2f\n",
                  format_point(sa.x_support[xi]).c_str(), ca.p01, ca.p10, cb.p01, cb.p10);
    std::cout << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "\nmax observable discrepancy over (x,t,y) cells: %.3g\n",
                rep.max_observable_discrepancy);
  std::cout << buf;
  std::cout << "\nresponder TPR of the policy Z = 1[x >= 1]:\n";
  std::snprintf(buf, sizeof(buf),
                "  population A: %.12g\n  population B: %.12g\n  gap:          %.12g\n",
                rep.tpr_a, rep.tpr_b, rep.gap);
  std::cout << buf;
  std::cout << "\nThe same observable distribution admits responder TPRs this far "
               "apart;\nonly an assumption limiting anti-responder mass narrows it.\n";
  if (!o.demo_out.empty()) {
    std::filesystem::create_directories(o.demo_out);
    const auto pa = join_path(o.demo_out, "witness_a.json");
    const auto pb = join_path(o.demo_out, "witness_b.json");
    save_spec(sa, pa);
    save_spec(sb, pb);
    std::cout << "\nwrote " << pa << "\nwrote " << pb << '\n';
  }
  return 0;
}

inline int cmd_simulate(const CliOptions& o) {
  const auto spec = load_spec(o.spec_path);
  const auto gen = generate(spec, o.sim_n, o.cfg.seed);
  const Dataset out = o.sim_scores ? attach_population_scores(spec, gen) : gen.data;
  write_delimited(out, o.sim_out, o.cfg.schema);
  std::cout << "wrote " << out.size() << " units to " << o.sim_out << '\n';
  return 0;
}

inline int cmd_support(const CliOptions& o) {
  const auto mu = parse_contrast(o.mu_arg);
  const Dataset raw = ingest(o.cfg.input_path, o.cfg.schema);
  const auto fit = fit_predict(raw, o.cfg.nuisance());
  const auto z = apply_policy(fit.data, Policy::threshold(o.cfg.theta));
  const auto res = support(fit.data, z, mu, o.support_b, o.grid_n);

  ordered_json j;
  j["tool"] = "respaudit";
  j["command"] = "support";
  j["config"] = {{"input", o.cfg.input_path},
                 {"estimator", estimator_name(o.cfg.estimator)},
                 {"seed", o.cfg.seed},
                 {"theta", o.cfg.theta},
                 {"B", o.support_b},
                 {"grid", o.grid_n}};
  ordered_json mu_j = ordered_json::array();
  for (const auto& e : mu.entries)
    mu_j.push_back({{"group", e.group}, {"tpr", e.tpr}, {"tnr", e.tnr}});
  j["config"]["mu"] = std::move(mu_j);
  j["warnings"] = fit.model.warnings;
  j["value"] = res.value;
  j["per_group"] = ordered_json::array();
  for (const auto& g : res.per_group) {
    ordered_json gj;
    gj["group"] = g.group;
    gj["value"] = g.value;
    gj["value_check"] = g.value_check;
    gj["t_star"] = g.t_star;
    gj["budget"] = g.budget;
    gj["n_saturated"] = g.n_saturated;
    gj["fractional_index"] = g.fractional_index;
    gj["skipped_singular"] = g.skipped_singular;
    gj["dropped_infeasible"] = g.dropped_infeasible;
    j["per_group"].push_back(std::move(gj));
  }
  std::cout << j.dump(2) << '\n';
  if (!o.json_out.empty()) {
    write_json(j, o.json_out);
    std::cerr << "wrote " << o.json_out << '\n';
  }
  return 0;
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"Audit of responder-conditional error rates under bounded anti-responder mass"};
  app.require_subcommand(1);
  detail::CliOptions o;
  if (const char* env = std::getenv("RESPAUDIT_OUT_DIR"); env && *env) o.cfg.out_dir = env;
  std::string estimator = "binning";

  auto* audit = app.add_subcommand("audit", "interval report and disparity bands");
  audit->add_option("--input", o.cfg.input_path, "delimited data file")->required();
  audit->add_option("--out-dir", o.cfg.out_dir, "output directory")->capture_default_str();
  audit->add_option("--splits", o.cfg.n_splits, "bootstrap resplits")
      ->capture_default_str();
  audit->add_option("--B", o.cfg.budgets, "anti-responder budgets, ascending")
      ->capture_default_str();
  audit->add_option("--theta", o.cfg.theta, "policy threshold on tau_hat")
      ->capture_default_str();
  audit->add_option("--groups", o.cfg.groups, "groups to audit (default: all)");
  audit->add_flag("--plot", o.cfg.plot, "also write SVG plots");
  detail::add_fit_flags(audit, o, estimator);
  detail::add_schema_flags(audit, o);

  auto* curves = app.add_subcommand("curves", "ROC / xROC / disparity curve bands");
  curves->add_option("--input", o.cfg.input_path, "delimited data file")->required();
  curves->add_option("--out-dir", o.cfg.out_dir, "output directory")
      ->capture_default_str();
  curves->add_option("--splits", o.cfg.n_splits, "bootstrap resplits")
      ->capture_default_str();
  curves->add_option("--B", o.cfg.budgets, "anti-responder budgets, ascending")
      ->capture_default_str();
  curves->add_option("--kinds", o.kinds, "roc|xroc|tpr_disparity|tnr_disparity")
      ->expected(-1);
  curves->add_option("--groups", o.cfg.groups, "groups to include (default: all)");
  curves->add_flag("--plot", o.cfg.plot, "also write SVG plots");
  detail::add_fit_flags(curves, o, estimator);
  detail::add_schema_flags(curves, o);

  auto* simulate = app.add_subcommand("simulate", "draw a dataset from a synthetic spec");
  simulate->add_option("--spec", o.spec_path, "synthetic spec JSON")->required();
  simulate->add_option("--n", o.sim_n, "number of units")->capture_default_str();
  simulate->add_option("--seed", o.cfg.seed, "random seed")->capture_default_str();
  simulate->add_option("--out", o.sim_out, "output data file")->required();
  simulate->add_flag("--scores", o.sim_scores,
                     "attach the population scores implied by the spec");
  simulate->add_option("--delimiter", o.delimiter, "field delimiter")
      ->capture_default_str();

  auto* support_cmd = app.add_subcommand("support", "support function of a rate contrast");
  support_cmd->add_option("--input", o.cfg.input_path, "delimited data file")->required();
  support_cmd->add_option("--mu", o.mu_arg, "contrast, group:tpr:tnr[,group:tpr:tnr...]")
      ->required();
  support_cmd->add_option("--B", o.support_b, "anti-responder budget")->required();
  support_cmd->add_option("--grid", o.grid_n, "denominator grid resolution")
      ->capture_default_str();
  support_cmd->add_option("--theta", o.cfg.theta, "policy threshold on tau_hat")
      ->capture_default_str();
  support_cmd->add_option("--out", o.json_out, "also write the JSON result here");
  detail::add_fit_flags(support_cmd, o, estimator);
  detail::add_schema_flags(support_cmd, o);

  auto* demo = app.add_subcommand("demo-nonid",
                                  "two populations, same observables, different rates");
  demo->add_option("--out", o.demo_out, "directory for the witness spec files");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    detail::finish_config(o, estimator);
    if (app.got_subcommand(simulate)) return detail::cmd_simulate(o);
    if (app.got_subcommand(demo)) return detail::cmd_demo_nonid(o);
    if (app.got_subcommand(support_cmd)) return detail::cmd_support(o);
    const Dataset ds = ingest(o.cfg.input_path, o.cfg.schema);
    if (app.got_subcommand(audit)) {
      detail::print_files(run_audit(ds, o.cfg));
      return 0;
    }
    std::vector<CurveKind> kinds;
    kinds.reserve(o.kinds.size());
    for (const auto& k : o.kinds) kinds.push_back(detail::parse_curve_kind(k));
    detail::print_files(run_curves(ds, o.cfg, std::move(kinds)));
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(std::move(args));
}

}  // namespace respaudit
