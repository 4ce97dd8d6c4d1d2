#pragma once

// The estimand/method compatibility map and end-to-end design execution:
// propensity model, then matching or weighting, then a weight vector whose
// label says which population it represents.

#include <optional>
#include <string_view>
#include <vector>

#include "etk/core.hpp"
#include "etk/estimation.hpp"
#include "etk/matching.hpp"
#include "etk/propensity.hpp"
#include "etk/weighting.hpp"

namespace etk {

enum class Method {
  PairMatching,
  CaliperMatching,
  FullMatching,
  FineStratification,
  Cem,
  CardinalityMatching,
  SmrWeights,
  IpwWeights,
  OverlapWeights,
  MatchingWeights,
  WeightTrimming,
};

inline constexpr Method kAllMethods[] = {
    Method::PairMatching,   Method::CaliperMatching, Method::FullMatching,
    Method::FineStratification, Method::Cem,        Method::CardinalityMatching,
    Method::SmrWeights,     Method::IpwWeights,      Method::OverlapWeights,
    Method::MatchingWeights, Method::WeightTrimming};

std::string_view method_id(Method m);
// Throws ValidationError on unknown identifiers.
Method parse_method(std::string_view id);

// ATT/ATU: pair matching, full matching, fine stratification, SMR weights.
// ATE: full matching, fine stratification, IPW.
// ATO: caliper matching, CEM, cardinality matching, overlap weights,
//      matching weights, weight trimming.
bool compatible(Method m, Estimand e);
std::vector<Method> methods_for(Estimand e);
bool uses_propensity(Method m);

enum class PairSolver { Optimal, Greedy };

struct MethodParams {
  MatchSpec match;
  PairSolver pair_solver = PairSolver::Optimal;
  TrimSpec trim;
  LogisticOptions logistic;
};

struct Design {
  Method method = Method::IpwWeights;
  Estimand requested = Estimand::ATE;
  std::optional<PropensityModel> propensity;
  std::optional<MatchStructure> match;
  WeightVector weights;

  // The estimand the weights actually represent (after any relabeling).
  Estimand estimand() const { return weights.target; }
};

// Throws IncompatibleError before any work when the pair is not in the map.
Design run_design(const Dataset& dataset, Method method, Estimand estimand,
                  const MethodParams& params = {});

EffectEstimate estimate_effect(const Dataset& dataset, const Design& design,
                               Measure measure = Measure::MeanDifference);

Pipeline make_pipeline(Method method, Estimand estimand, MethodParams params = {},
                       Measure measure = Measure::MeanDifference);

}  // namespace etk
