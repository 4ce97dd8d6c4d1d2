#include "etk/pipeline.hpp"

#include <algorithm>

namespace etk {

std::string_view method_id(Method m) {
  switch (m) {
    case Method::PairMatching: return "pair-matching";
    case Method::CaliperMatching: return "caliper-matching";
    case Method::FullMatching: return "full-matching";
    case Method::FineStratification: return "fine-stratification";
    case Method::Cem: return "cem";
    case Method::CardinalityMatching: return "cardinality-matching";
    case Method::SmrWeights: return "smr-weights";
    case Method::IpwWeights: return "ipw-weights";
    case Method::OverlapWeights: return "overlap-weights";
    case Method::MatchingWeights: return "matching-weights";
    case Method::WeightTrimming: return "weight-trimming";
  }
  return "?";
}

Method parse_method(std::string_view id) {
  for (Method m : kAllMethods) {
    if (id == method_id(m)) return m;
  }
  std::string known;
  for (Method m : kAllMethods) {
    if (!known.empty()) known += ", ";
    known += method_id(m);
  }
  throw ValidationError("unknown method '" + std::string(id) + "' (known: " + known + ")");
}

bool compatible(Method m, Estimand e) {
  switch (e) {
    case Estimand::ATT:
    case Estimand::ATU:
      return m == Method::PairMatching || m == Method::FullMatching ||
             m == Method::FineStratification || m == Method::SmrWeights;
    case Estimand::ATE:
      return m == Method::FullMatching || m == Method::FineStratification ||
             m == Method::IpwWeights;
    case Estimand::ATO:
      return m == Method::CaliperMatching || m == Method::Cem ||
             m == Method::CardinalityMatching || m == Method::OverlapWeights ||
             m == Method::MatchingWeights || m == Method::WeightTrimming;
  }
  return false;
}

std::vector<Method> methods_for(Estimand e) {
  std::vector<Method> out;
  for (Method m : kAllMethods) {
    if (compatible(m, e)) out.push_back(m);
  }
  return out;
}

bool uses_propensity(Method m) {
  return m != Method::Cem && m != Method::CardinalityMatching;
}

namespace {

Group focal_for(Estimand e, const Dataset& dataset) {
  if (e == Estimand::ATT) return Group::Treated;
  if (e == Estimand::ATU) return Group::Untreated;
  // Equipoise pair matching matches the smaller group.
  return dataset.treated_count() <= dataset.untreated_count() ? Group::Treated : Group::Untreated;
}

MatchStructure pair_match(const Dataset& dataset, const std::vector<double>& scores,
                          const MatchSpec& spec, PairSolver solver) {
  return solver == PairSolver::Greedy ? greedy_nn(dataset, scores, spec)
                                      : optimal_pair(dataset, scores, spec);
}

}  // namespace

Design run_design(const Dataset& dataset, Method method, Estimand estimand,
                  const MethodParams& params) {
  if (!compatible(method, estimand)) {
    std::string allowed;
    for (Method m : methods_for(estimand)) {
      if (!allowed.empty()) allowed += ", ";
      allowed += method_id(m);
    }
    std::string why;
    if (method == Method::PairMatching && estimand == Estimand::ATE) {
      why = " (pair matching is inappropriate for the ATE: it reshapes one group toward the "
            "other rather than both toward the full sample)";
    }
    throw IncompatibleError("method '" + std::string(method_id(method)) + "' does not target the " +
                            std::string(to_string(estimand)) + why + "; methods for the " +
                            std::string(to_string(estimand)) + ": " + allowed);
  }
  require_valid(dataset);

  Design design;
  design.method = method;
  design.requested = estimand;
  if (uses_propensity(method)) design.propensity = fit_logistic(dataset, params.logistic);
  const std::vector<double> scores = design.propensity ? design.propensity->scores
                                                       : std::vector<double>{};
  const auto& t = dataset.treatments();
  MatchSpec spec = params.match;

  switch (method) {
    case Method::PairMatching:
      spec.focal = focal_for(estimand, dataset);
      design.match = pair_match(dataset, scores, spec, params.pair_solver);
      design.weights = match_to_weights(*design.match, estimand, t);
      break;
    case Method::CaliperMatching:
      spec.focal = focal_for(estimand, dataset);
      if (!spec.caliper) spec.caliper = kDefaultCaliper;
      design.match = pair_match(dataset, scores, spec, params.pair_solver);
      design.weights = match_to_weights(*design.match, Estimand::ATO, t);
      break;
    case Method::FullMatching:
      design.match = full_matching(dataset, scores, spec);
      design.weights = match_to_weights(*design.match, estimand, t);
      break;
    case Method::FineStratification:
      design.match = fine_stratification(dataset, scores, spec);
      design.weights = match_to_weights(*design.match, estimand, t);
      break;
    case Method::Cem:
      design.match = cem(dataset, spec);
      design.weights = match_to_weights(*design.match, Estimand::ATO, t);
      break;
    case Method::CardinalityMatching:
      if (spec.balance_tolerance.empty()) spec.balance_tolerance = {0.1};
      design.match = cardinality_matching(dataset, spec);
      design.weights = match_to_weights(*design.match, Estimand::ATO, t);
      break;
    case Method::SmrWeights:
      design.weights = smr(scores, t, estimand);
      break;
    case Method::IpwWeights:
      design.weights = ipw_ate(scores, t);
      break;
    case Method::OverlapWeights:
      design.weights = overlap_ato(scores, t);
      break;
    case Method::MatchingWeights:
      design.weights = matching_weights(scores, t);
      break;
    case Method::WeightTrimming:
      design.weights = trim(ipw_ate(scores, t), scores, t, params.trim);
      break;
  }
  if (design.propensity && design.propensity->quasi_separated) {
    design.weights.warnings.push_back(
        "propensity model did not converge: a covariate pattern contains only one treatment "
        "group, so some scores were clamped to the boundary");
  }
  if (design.match) design.weights.provenance = std::string(method_id(method)) + " (" +
                                                design.match->method + ")";
  return design;
}

EffectEstimate estimate_effect(const Dataset& dataset, const Design& design, Measure measure) {
  EffectEstimate est = hajek_contrast(dataset, design.weights, measure);
  est.method = design.weights.provenance;
  return est;
}

Pipeline make_pipeline(Method method, Estimand estimand, MethodParams params, Measure measure) {
  if (!compatible(method, estimand)) {
    // Surface the incompatibility at construction, not on first use.
    (void)run_design(Dataset{}, method, estimand, params);
  }
  return [method, estimand, params = std::move(params), measure](const Dataset& dataset) {
    return estimate_effect(dataset, run_design(dataset, method, estimand, params), measure);
  };
}

}  // namespace etk
