#pragma once

// Data-generating processes with known potential outcomes, true estimands,
// and bias evaluation of estimation pipelines against them.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etk/core.hpp"
#include "etk/estimation.hpp"

namespace etk {

struct CovariateLaw {
  enum class Kind { Bernoulli, Uniform, Normal };
  std::string name;
  Kind kind = Kind::Normal;
  double a = 0.0;  // Bernoulli p, uniform lower bound, or normal mean
  double b = 1.0;  // uniform upper bound or normal SD

  static CovariateLaw bernoulli(std::string name, double p);
  static CovariateLaw uniform(std::string name, double lo, double hi);
  static CovariateLaw normal(std::string name, double mu, double sd);
};

struct LinearFunction {
  double intercept = 0.0;
  std::vector<double> slopes;

  double operator()(std::span<const double> x) const;
};

// Units whose covariate falls in [lo, hi) get the fixed score (0 or 1).
struct HardRegion {
  std::size_t covariate = 0;
  double lo = 0.0;
  double hi = 0.0;
  double score = 0.0;
};

// Unmeasured frailty, present only where the pre-frailty score lies outside
// [lo, hi]. A frail unit's treatment logit moves by logit_shift and its Y^0
// by y0_shift.
struct FrailtyConfig {
  double lo = 0.2;
  double hi = 0.8;
  double prevalence = 0.5;
  double logit_shift = 3.0;
  double y0_shift = -10.0;
};

struct DGPConfig {
  std::size_t n = 500;
  std::vector<CovariateLaw> covariates;
  LinearFunction treatment;  // logit of the score
  std::vector<HardRegion> hard_regions;
  LinearFunction baseline;   // mean of Y^0
  LinearFunction effect;     // mean of Y^1 - Y^0
  double noise_sd = 1.0;
  std::optional<FrailtyConfig> frailty;
  std::uint64_t seed = 1;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

struct SimulatedData {
  Dataset dataset;
  PotentialOutcomeTable potential;
  std::vector<double> true_scores;
};

SimulatedData generate(const DGPConfig& config);

struct TrueEstimands {
  double ate = 0.0;
  double att = 0.0;
  double atu = 0.0;
  // Overlap-tilted (e(1-e)) average; needs scores.
  std::optional<double> ato;

  // Throws ValidationError for ATO when it is unavailable.
  double get(Estimand e) const;
};

TrueEstimands true_estimands(const PotentialOutcomeTable& pot, std::span<const int> treatments,
                             std::optional<std::span<const double>> scores = std::nullopt);

struct BiasEvaluation {
  Estimand target = Estimand::ATE;
  double mean_bias = 0.0;
  double rmse = 0.0;
  double mc_se = 0.0;  // SD of the per-replicate errors over sqrt(R)
  std::vector<double> estimates;
  std::vector<double> truths;
  std::vector<Estimand> reported;
  std::vector<std::uint64_t> seeds;
  // Replicates whose true scores make the target infeasible.
  std::size_t infeasible = 0;
};

// Seed of replicate r in a run seeded with `seed`.
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate);

// Throws SolverError naming the replicate and its seed if the pipeline fails.
BiasEvaluation evaluate_bias(const DGPConfig& config, const Pipeline& pipeline, Estimand target,
                             std::size_t replications, std::uint64_t seed);

// Named configurations.
namespace scenarios {
// One binary covariate; the logistic model is saturated.
DGPConfig saturated_binary(std::size_t n = 500);
// Untreated units span the covariate range, treated units only its upper half.
DGPConfig overlap_a(std::size_t n = 500);
// Low covariate values never treated, high always treated, overlap in the middle.
DGPConfig overlap_b(std::size_t n = 500);
// Unmeasured frailty in the score tails.
DGPConfig tail_frailty(std::size_t n = 500);

std::vector<std::string> names();
// Throws ValidationError on unknown names.
DGPConfig by_name(const std::string& name, std::size_t n);
}  // namespace scenarios

}  // namespace etk
