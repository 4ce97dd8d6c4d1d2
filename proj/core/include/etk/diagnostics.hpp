#pragma once

// Balance and overlap assessment. Nothing here reads outcomes.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etk/core.hpp"

namespace etk {

// Weighted treated mean minus weighted untreated mean, divided by the
// unweighted full-sample pooled SD sqrt((s_T^2 + s_C^2) / 2).
double smd(const Dataset& dataset, std::size_t covariate,
           std::optional<std::span<const double>> weights = std::nullopt);

// Weighted treated variance over weighted untreated variance.
double variance_ratio(const Dataset& dataset, std::size_t covariate,
                      std::optional<std::span<const double>> weights = std::nullopt);

// Weighted mean of a covariate within one treatment group (1 or 0).
double weighted_group_mean(const Dataset& dataset, std::size_t covariate, int group,
                           std::optional<std::span<const double>> weights = std::nullopt);

struct BalanceRow {
  std::string covariate;
  double smd_unadjusted = 0.0;
  double variance_ratio_unadjusted = 0.0;
  std::optional<double> smd_adjusted;
  std::optional<double> variance_ratio_adjusted;
};

struct BalanceTable {
  std::vector<BalanceRow> rows;
  std::size_t n_treated = 0;
  std::size_t n_untreated = 0;
  std::optional<double> ess_treated;
  std::optional<double> ess_untreated;
  std::vector<std::size_t> positivity_flags;  // ids with scores outside the window
  double threshold = 0.1;

  // |SMD| within the threshold on every covariate (adjusted when available).
  bool balanced() const;
};

BalanceTable balance_table(const Dataset& dataset,
                           std::optional<std::span<const double>> weights = std::nullopt,
                           std::optional<std::span<const double>> scores = std::nullopt,
                           double window_lo = 0.1, double window_hi = 0.9,
                           double threshold = 0.1);

struct ScoreSummary {
  double min = 0.0;
  std::vector<double> deciles;  // 10th, 30th, 50th, 70th, 90th percentiles
  double max = 0.0;
  std::size_t count = 0;
};

inline constexpr double kFeasibilityTolerance = 0.05;

struct OverlapReport {
  ScoreSummary treated;
  ScoreSummary untreated;
  std::size_t outside_treated = 0;
  std::size_t outside_untreated = 0;
  double window_lo = 0.1;
  double window_hi = 0.9;
  double tolerance = kFeasibilityTolerance;
  std::map<Estimand, bool> feasible;
};

// Per-estimand feasibility on the score scale. The tolerance is a reporting
// heuristic: ATT needs every treated score within it of some untreated score,
// ATU the mirror image, ATE both plus coverage of the pooled range, ATO any
// treated/untreated pair within it.
OverlapReport overlap_report(std::span<const double> scores, std::span<const int> treatments,
                             double window_lo = 0.1, double window_hi = 0.9,
                             double tolerance = kFeasibilityTolerance);

}  // namespace etk
