#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "etk/diagnostics.hpp"
#include "etk/io.hpp"
#include "etk/surgery.hpp"

namespace etk::cli {
namespace {

std::string_view group_name(Group g) {
  switch (g) {
    case Group::Treated: return "treated";
    case Group::Untreated: return "untreated";
    case Group::All: return "all";
  }
  return "all";
}

std::string_view kind_name(MatchKind k) {
  switch (k) {
    case MatchKind::Pair: return "pair";
    case MatchKind::Full: return "full";
    case MatchKind::FineStrata: return "fine-strata";
    case MatchKind::Exact: return "exact";
    case MatchKind::Cardinality: return "cardinality";
  }
  return "full";
}

std::string population_description(const Design& design) {
  switch (design.estimand()) {
    case Estimand::ATT: return "units like the treated group";
    case Estimand::ATU: return "units like the untreated group";
    case Estimand::ATE: return "the whole sample";
    case Estimand::ATO: break;
  }
  std::string d = "equipoise population defined by the " + std::string(method_id(design.method));
  if (design.method == Method::OverlapWeights) d += " tilting e(1-e)";
  if (design.method == Method::MatchingWeights) d += " tilting min(e, 1-e)";
  return d + "; see the weighted covariate means";
}

Json summary_json(const ScoreSummary& s) {
  Json j;
  j["count"] = s.count;
  j["min"] = s.min;
  j["p10"] = s.deciles.at(0);
  j["p30"] = s.deciles.at(1);
  j["p50"] = s.deciles.at(2);
  j["p70"] = s.deciles.at(3);
  j["p90"] = s.deciles.at(4);
  j["max"] = s.max;
  return j;
}

Json overlap_json(const OverlapReport& r) {
  Json j;
  j["window"] = {r.window_lo, r.window_hi};
  j["tolerance"] = r.tolerance;
  j["tolerance_note"] = "reporting heuristic on the score scale";
  j["treated"] = summary_json(r.treated);
  j["untreated"] = summary_json(r.untreated);
  j["outside_window"] = {{"treated", r.outside_treated}, {"untreated", r.outside_untreated}};
  Json f;
  for (Estimand e : kAllEstimands) f[std::string(to_string(e))] = r.feasible.at(e);
  j["feasible"] = f;
  return j;
}

Json balance_json(const BalanceTable& b) {
  Json j;
  j["threshold"] = b.threshold;
  j["balanced"] = b.balanced();
  Json rows = Json::array();
  for (const BalanceRow& row : b.rows) {
    Json r;
    r["covariate"] = row.covariate;
    r["smd_before"] = row.smd_unadjusted;
    r["smd_after"] = row.smd_adjusted ? Json(*row.smd_adjusted) : Json(nullptr);
    r["variance_ratio_before"] = row.variance_ratio_unadjusted;
    r["variance_ratio_after"] =
        row.variance_ratio_adjusted ? Json(*row.variance_ratio_adjusted) : Json(nullptr);
    rows.push_back(r);
  }
  j["covariates"] = rows;
  j["positivity_flags"] = b.positivity_flags;
  return j;
}

Json estimate_json(const EffectEstimate& est) {
  Json j;
  j["measure"] = to_string(est.measure);
  j["point"] = est.point;
  j["treated_mean"] = est.treated_mean;
  j["untreated_mean"] = est.untreated_mean;
  j["method"] = est.method;
  j["population"] = est.population;
  return j;
}

struct SubgroupSpec {
  std::string covariate;
  double value = 0.0;
};

SubgroupSpec parse_subgroup(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("parameter 'subgroup': expected name=value, found '" + text + "'");
  }
  SubgroupSpec s;
  s.covariate = text.substr(0, eq);
  const std::string v = text.substr(eq + 1);
  try {
    std::size_t used = 0;
    s.value = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
  } catch (const std::exception&) {
    throw ValidationError("parameter 'subgroup': '" + v + "' is not a number");
  }
  return s;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ValidationError("cannot write output file '" + path + "'");
  file << text;
}

std::vector<std::string> assumptions(Estimand e) {
  std::vector<std::string> a = {
      "conditional exchangeability given the listed covariates (untestable)",
      "positivity within the target population (see the overlap section)",
      "consistency and no interference between units (assumed, not checked)",
  };
  if (e == Estimand::ATO) {
    a.push_back("the target population is defined by the design, not fixed before the analysis");
  }
  return a;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IncompatibleError*>(&e)) return kExitIncompatible;
  if (dynamic_cast<const ValidationError*>(&e)) return kExitValidation;
  return kExitSolver;
}

Json analysis_report(const RunConfig& config, bool design_only) {
  const Estimand estimand = config.method.parsed_estimand();
  const Method method = config.method.parsed_method();
  const Measure measure = config.method.parsed_measure();
  if (!compatible(method, estimand)) {
    // Rejected before the data file is opened.
    (void)run_design(Dataset{}, method, estimand);
  }
  const MethodParams params = config.method.params();
  if (config.bootstrap == 1) throw ValidationError("parameter 'bootstrap': need 0 or at least 2");
  if (!(config.window.first > 0.0 && config.window.first < config.window.second &&
        config.window.second < 1.0)) {
    throw ValidationError("parameter 'window': need 0 < lo < hi < 1");
  }
  if (config.data.empty()) throw ValidationError("parameter 'data' is required");

  const CsvTable table = read_csv(config.data);
  ColumnRoles roles;
  roles.treatment = config.treatment;
  roles.covariates = config.covariates;
  if (roles.covariates.empty()) {
    for (const auto& h : table.header) {
      if (h != config.treatment && h != config.outcome) roles.covariates.push_back(h);
    }
  }
  if (design_only) {
    roles.outcome.reset();
  } else {
    roles.outcome = config.outcome;
  }
  Dataset dataset = dataset_from_csv(table, roles, !design_only);

  std::string population = "full sample";
  std::vector<std::string> warnings;
  if (config.subgroup) {
    const SubgroupSpec spec = parse_subgroup(*config.subgroup);
    const auto& names = dataset.covariate_names();
    const auto it = std::find(names.begin(), names.end(), spec.covariate);
    if (it == names.end()) {
      throw ValidationError("parameter 'subgroup': unknown covariate '" + spec.covariate + "'");
    }
    const std::size_t j = static_cast<std::size_t>(it - names.begin());
    Subgroup sub = make_subgroup(
        dataset, [&](const Unit& u) { return u.covariates[j] == spec.value; }, *config.subgroup);
    dataset = std::move(sub.dataset);
    population = "subgroup " + *config.subgroup;
    warnings = std::move(sub.warnings);
  }

  const Design design = run_design(dataset, method, estimand, params);
  const auto& t = dataset.treatments();
  const auto& w = design.weights.weights;

  std::optional<std::vector<double>> scores;
  if (design.propensity) {
    scores = design.propensity->scores;
  } else {
    try {
      scores = fit_logistic(dataset, params.logistic).scores;
    } catch (const Error& e) {
      warnings.push_back(std::string("no overlap report: the diagnostic propensity model failed: ") +
                         e.what());
    }
  }

  warnings.insert(warnings.end(), design.weights.warnings.begin(), design.weights.warnings.end());
  std::optional<OverlapReport> overlap;
  if (scores) {
    overlap = overlap_report(*scores, t, config.window.first, config.window.second);
    if (!overlap->feasible.at(estimand)) {
      warnings.push_back("overlap report marks the " + std::string(to_string(estimand)) +
                         " infeasible at score tolerance " + format_number(overlap->tolerance) +
                         " (reporting heuristic)");
    }
  }

  Json design_json;
  design_json["population"] = population;
  design_json["units"] = {{"total", dataset.size()},
                          {"treated", dataset.treated_count()},
                          {"untreated", dataset.untreated_count()}};
  design_json["covariates"] = dataset.covariate_names();
  if (design.propensity) {
    const auto& pm = *design.propensity;
    Json coef;
    coef["(intercept)"] = pm.coefficients.at(0);
    for (std::size_t j = 0; j < dataset.covariate_count(); ++j) {
      coef[dataset.covariate_names()[j]] = pm.coefficients.at(j + 1);
    }
    design_json["propensity"] = {{"model", "logistic"},
                                 {"coefficients", coef},
                                 {"converged", pm.converged},
                                 {"iterations", pm.iterations}};
  } else {
    design_json["propensity"] = nullptr;
  }
  if (design.match) {
    const auto& ms = *design.match;
    Json m;
    m["algorithm"] = ms.method;
    m["kind"] = kind_name(ms.kind);
    if (ms.kind == MatchKind::Pair) m["focal_group"] = group_name(ms.focal);
    m["strata"] = ms.strata.size();
    m["discarded"] = ms.discarded;
    m["discarded_treated"] = ms.discarded_in(t, 1);
    m["discarded_untreated"] = ms.discarded_in(t, 0);
    if (ms.kind == MatchKind::Pair || ms.kind == MatchKind::Full) {
      m["total_distance"] = ms.total_distance;
    }
    design_json["match"] = m;
  }
  design_json["weights"] = {
      {"provenance", design.weights.provenance},
      {"target", to_string(design.estimand())},
      {"ess", {{"treated", ess(w, t, Group::Treated)}, {"untreated", ess(w, t, Group::Untreated)}}}};

  Json means_t, means_c;
  for (std::size_t j = 0; j < dataset.covariate_count(); ++j) {
    const auto& name = dataset.covariate_names()[j];
    means_t[name] = weighted_group_mean(dataset, j, 1, w);
    means_c[name] = weighted_group_mean(dataset, j, 0, w);
  }
  design_json["target_population"] = {{"estimand", to_string(design.estimand())},
                                      {"description", population_description(design)},
                                      {"weighted_means", {{"treated", means_t}, {"untreated", means_c}}}};

  std::optional<std::span<const double>> score_span;
  if (scores) score_span = *scores;
  design_json["balance"] = balance_json(balance_table(dataset, std::span<const double>(w), score_span,
                                                      config.window.first, config.window.second,
                                                      config.balance_threshold));
  design_json["overlap"] = overlap ? overlap_json(*overlap) : Json(nullptr);
  design_json["warnings"] = warnings;

  Json report;
  report["schema_version"] = kSchemaVersion;
  report["command"] = design_only ? "balance" : "analyze";
  report["estimand"] = to_string(design.estimand());
  report["method"] = method_id(method);
  report["requested_estimand"] = to_string(estimand);
  report["relabeled"] = design.estimand() != estimand;
  report["design"] = design_json;

  if (!design_only) {
    EffectEstimate est = estimate_effect(dataset, design, measure);
    est.population = population;
    Json e = estimate_json(est);
    e["ess"] = {{"treated", ess(w, t, Group::Treated)}, {"untreated", ess(w, t, Group::Untreated)}};
    if (config.bootstrap >= 2) {
      const BootstrapResult b = bootstrap(dataset, make_pipeline(method, estimand, params, measure),
                                          config.bootstrap, config.seed);
      e["se"] = b.se;
      e["interval"] = {b.lower, b.upper};
      e["bootstrap"] = {{"replicates", config.bootstrap},
                        {"seed", config.seed},
                        {"failures", b.failures},
                        {"interval_type", "percentile 95%"}};
    } else {
      e["se"] = nullptr;
      e["interval"] = nullptr;
    }
    e["warnings"] = est.warnings;
    report["estimate"] = e;
  }
  report["assumptions"] = assumptions(design.estimand());
  return report;
}

Json simulation_report(const SimConfig& config) {
  const Estimand estimand = config.method.parsed_estimand();
  const Method method = config.method.parsed_method();
  const Measure measure = config.method.parsed_measure();
  if (!compatible(method, estimand)) (void)run_design(Dataset{}, method, estimand);
  const MethodParams params = config.method.params();
  if (config.replications < 1) throw ValidationError("parameter 'replications' must be at least 1");
  const DGPConfig dgp = config.resolved_dgp();

  const BiasEvaluation eval =
      evaluate_bias(dgp, make_pipeline(method, estimand, params, measure), estimand,
                    config.replications, config.seed);

  Json report;
  report["schema_version"] = kSchemaVersion;
  report["command"] = "simulate";
  report["scenario"] = config.scenario ? *config.scenario : "custom";
  report["n"] = dgp.n;
  report["estimand"] = to_string(estimand);
  report["method"] = method_id(method);
  report["replications"] = config.replications;
  report["seed"] = config.seed;
  report["truth_definition"] = {
      {"ATE", "mean of Y1 - Y0 over the sample"},
      {"ATT", "mean of Y1 - Y0 over treated units"},
      {"ATU", "mean of Y1 - Y0 over untreated units"},
      {"ATO", "mean of Y1 - Y0 tilted by e(1-e) with the true scores"}};
  std::size_t relabeled = 0;
  for (Estimand e : eval.reported) relabeled += e != estimand ? 1 : 0;
  report["aggregate"] = {{"mean_bias", eval.mean_bias},
                         {"rmse", eval.rmse},
                         {"mc_se", eval.mc_se},
                         {"infeasible", eval.infeasible},
                         {"relabeled", relabeled}};
  Json reps = Json::array();
  for (std::size_t r = 0; r < eval.estimates.size(); ++r) {
    reps.push_back({{"replicate", r},
                    {"seed", eval.seeds[r]},
                    {"estimand", to_string(eval.reported[r])},
                    {"estimate", eval.estimates[r]},
                    {"truth", eval.truths[r]}});
  }
  report["replicates"] = reps;
  return report;
}

std::string oracle_text() {
  // Twelve significant digits hide the rounding in the tilted average.
  const auto show = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  const auto pot = surgery::potential_outcomes();
  const auto t = surgery::treatments();
  const auto truths = true_estimands(pot, t, surgery::stratum_scores());
  std::ostringstream out;
  out << "ATE=" << show(truths.ate) << '\n'
      << "ATT=" << show(truths.att) << '\n'
      << "ATU=" << show(truths.atu) << '\n'
      << "ATO=" << show(*truths.ato)
      << " (tilting e(1-e); scores 0.6 where X=0, 0.2 where X=1)\n";
  return out.str();
}

std::string dump(const Json& report) { return report.dump(2) + "\n"; }

int run_analysis(const RunConfig& config, bool design_only, std::ostream& out, std::ostream& err) {
  try {
    write_output(config.output, dump(analysis_report(config, design_only)), out);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int run_simulation(const SimConfig& config, std::ostream& out, std::ostream& err) {
  try {
    write_output(config.output, dump(simulation_report(config)), out);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int run_oracle(std::ostream& out) {
  out << oracle_text();
  return kExitOk;
}

}  // namespace etk::cli
