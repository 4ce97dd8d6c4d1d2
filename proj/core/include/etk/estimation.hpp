#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "etk/core.hpp"

namespace etk {

enum class Measure { MeanDifference, RiskRatio, OddsRatio };

std::string_view to_string(Measure m);
Measure parse_measure(std::string_view name);

struct EffectEstimate {
  Estimand estimand = Estimand::ATE;
  Measure measure = Measure::MeanDifference;
  double point = 0.0;
  // Weighted treated and untreated means (proportions for ratio measures).
  double treated_mean = 0.0;
  double untreated_mean = 0.0;
  std::optional<double> se;
  std::optional<std::pair<double, double>> interval;
  std::string method;
  std::string population = "full sample";
  std::optional<double> ess_treated;
  std::optional<double> ess_untreated;
  std::vector<std::string> warnings;
};

// Normalized (Hajek) weighted contrast; the estimand label comes from the
// weights. Ratio measures are delegated to ratio_measure.
EffectEstimate hajek_contrast(const Dataset& dataset, const WeightVector& weights,
                              Measure measure = Measure::MeanDifference);

// Risk ratio or odds ratio of weighted outcome proportions; outcomes must be 0/1.
EffectEstimate ratio_measure(const Dataset& dataset, const WeightVector& weights, Measure measure);

// Within-stratum mean differences combined by stratum size (ATE, ATO),
// treated count (ATT) or untreated count (ATU).
EffectEstimate stratified_estimate(const Dataset& dataset, const MatchStructure& ms,
                                   Estimand target);

// Fits one linear outcome model per treatment group, predicts both potential
// outcomes for every unit and averages the difference over the target
// population. For ATO the population weights default to e(1-e) from a fitted
// logistic propensity model.
EffectEstimate g_computation(const Dataset& dataset, Estimand target,
                             std::optional<std::span<const double>> population_weights = std::nullopt);

using Pipeline = std::function<EffectEstimate(const Dataset&)>;
using UnitPredicate = std::function<bool(const Unit&)>;

struct Subgroup {
  Dataset dataset;
  std::string label;
  std::vector<std::string> dropped;
  std::vector<std::string> warnings;
};

// Units satisfying the predicate, without covariates that are constant among
// them. Throws ValidationError if a treatment group is empty.
Subgroup make_subgroup(const Dataset& dataset, const UnitPredicate& in_subgroup,
                       const std::string& label);

// Re-runs the whole pipeline inside the subgroup. Covariates that are constant
// within the subgroup are dropped before the pipeline sees the data.
EffectEstimate subgroup_estimate(const Dataset& dataset, const UnitPredicate& in_subgroup,
                                 const Pipeline& pipeline, const std::string& label);

struct BootstrapResult {
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> replicates;
  std::size_t failures = 0;
};

// Random stream for replicate `index` of a run seeded with `seed`; streams do
// not depend on evaluation order.
std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t index);

// Unit-level nonparametric bootstrap with percentile interval. Aborts with a
// SolverError when more than 10% of replicates fail.
BootstrapResult bootstrap(const Dataset& dataset, const Pipeline& pipeline, std::size_t replicates,
                          std::uint64_t seed);

}  // namespace etk
