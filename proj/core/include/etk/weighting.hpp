#pragma once

// Estimand-targeted weights built from propensity scores, plus trimming and
// effective sample size.

#include <span>

#include "etk/core.hpp"

namespace etk {

// 1/e for treated, 1/(1-e) for untreated.
WeightVector ipw_ate(std::span<const double> scores, std::span<const int> treatments);

// Standardized mortality ratio weights. ATT: treated 1, untreated e/(1-e).
// ATU: treated (1-e)/e, untreated 1. Other targets throw IncompatibleError.
WeightVector smr(std::span<const double> scores, std::span<const int> treatments,
                 Estimand target);

// 1-e for treated, e for untreated.
WeightVector overlap_ato(std::span<const double> scores, std::span<const int> treatments);

// min(e, 1-e) divided by the probability of the received treatment.
WeightVector matching_weights(std::span<const double> scores, std::span<const int> treatments);

struct TrimSpec {
  enum class Mode { ScoreWindow, WeightPercentile };
  Mode mode = Mode::ScoreWindow;
  double lo = 0.1;
  double hi = 0.9;
  double percentile = 0.99;

  static TrimSpec window(double lo, double hi);
  static TrimSpec cap(double percentile);
  void validate() const;
};

// Score-window mode zeroes units with e outside [lo, hi]; percentile mode caps
// weights at the given percentile of the positive weights. The result always
// targets ATO. Throws ValidationError if a whole group loses its weight.
WeightVector trim(const WeightVector& weights, std::span<const double> scores,
                  std::span<const int> treatments, const TrimSpec& spec);

// (sum w)^2 / sum w^2 over the group.
double ess(std::span<const double> weights, std::span<const int> treatments, Group group);

}  // namespace etk
