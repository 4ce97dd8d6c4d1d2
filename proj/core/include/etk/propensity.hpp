#pragma once

#include <span>
#include <vector>

#include "etk/core.hpp"

namespace etk {

struct LogisticOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;   // on the largest absolute coefficient change
  double ridge = 1e-10;       // jitter added to the weighted normal equations
  double divergence_bound = 30.0;
  double clamp = 1e-12;
};

// Logistic model of P(T = 1 | X). coefficients[0] is the intercept.
struct PropensityModel {
  std::vector<double> coefficients;
  std::vector<double> scores;
  bool converged = false;
  int iterations = 0;
  // Set when some coefficient diverged without the groups being perfectly
  // separated; scores are then clamped and the fit is reported unconverged.
  bool quasi_separated = false;
};

// Maximum-likelihood fit by iteratively reweighted least squares.
// Throws ValidationError on a rank-deficient design (naming the collinear
// columns) and SolverError on complete separation.
PropensityModel fit_logistic(const Dataset& dataset, const LogisticOptions& options = {});

// Throws ValidationError for scores outside (0, 1).
std::vector<double> logit(std::span<const double> scores);
double logit(double score);

// Bernoulli log-likelihood and its gradient at an arbitrary coefficient
// vector (intercept first).
double logistic_log_likelihood(const Dataset& dataset, std::span<const double> coefficients);
std::vector<double> logistic_gradient(const Dataset& dataset,
                                      std::span<const double> coefficients);

}  // namespace etk
