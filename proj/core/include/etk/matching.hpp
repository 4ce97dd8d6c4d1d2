#pragma once

// Matching and stratification designs. Every routine is deterministic: unit
// ids (input order) break all ties, lowest id first.

#include <optional>
#include <span>
#include <vector>

#include "etk/core.hpp"

namespace etk {

enum class Distance {
  LogitScore,          // |logit(e_i) - logit(e_j)|
  CovariateEuclidean,  // Euclidean on covariates standardized by the full-sample SD
};

struct MatchSpec {
  Distance distance = Distance::LogitScore;
  // For logit distances, a multiple of the SD of the logit scores. For
  // covariate distances, an absolute bound.
  std::optional<double> caliper;
  int ratio = 1;
  int strata_count = 5;
  // Overrides Sturges' rule for coarsening continuous covariates.
  std::optional<int> cem_bins;
  // Per-covariate SMD bound; a single entry applies to every covariate.
  std::vector<double> balance_tolerance;
  // Group whose members are each matched (ATT: treated, ATU: untreated).
  Group focal = Group::Treated;

  void validate() const;
};

inline constexpr double kDefaultCaliper = 0.2;
inline constexpr std::size_t kCardinalityExactLimit = 30;

MatchStructure greedy_nn(const Dataset& dataset, std::span<const double> scores,
                         const MatchSpec& spec);

// Minimum total distance 1:ratio matching, solved as a min-cost flow.
MatchStructure optimal_pair(const Dataset& dataset, std::span<const double> scores,
                            const MatchSpec& spec);

// Minimum-cost partition into strata that each hold both groups (a minimum
// edge cover of the treated/untreated distance graph, found by min-cost flow).
MatchStructure full_matching(const Dataset& dataset, std::span<const double> scores,
                             const MatchSpec& spec);

MatchStructure fine_stratification(const Dataset& dataset, std::span<const double> scores,
                                   const MatchSpec& spec);

// Coarsened exact matching; binary covariates stay exact.
MatchStructure cem(const Dataset& dataset, const MatchSpec& spec);

// Largest subset whose absolute SMD (full-sample pooled SD) is within the
// tolerance on every covariate. Exact branch and bound up to
// kCardinalityExactLimit units per group, local search beyond.
MatchStructure cardinality_matching(const Dataset& dataset, const MatchSpec& spec);

// Sum of the pair distances of a pair or full-matching structure, recomputed
// in a canonical order.
double structure_distance(const Dataset& dataset, std::span<const double> scores,
                          const MatchStructure& ms, Distance distance = Distance::LogitScore);

// Converts strata to weights for the target. Discarding any target-group unit
// relabels the result ATO with a warning.
WeightVector match_to_weights(const MatchStructure& ms, Estimand target,
                              std::span<const int> treatments);

}  // namespace etk
