#pragma once

// Shared data model: units, datasets, estimands, weights and match structures.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace etk {

// Base of every error raised by the toolkit. The subclasses map onto the CLI
// exit codes (2 validation, 3 incompatibility, 4 solver failure).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IncompatibleError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

enum class Estimand { ATT, ATU, ATE, ATO };

inline constexpr Estimand kAllEstimands[] = {Estimand::ATT, Estimand::ATU,
                                             Estimand::ATE, Estimand::ATO};

std::string_view to_string(Estimand e);
// Case-insensitive; throws ValidationError on unknown names.
Estimand parse_estimand(std::string_view name);

enum class Group { Treated, Untreated, All };

struct Unit {
  std::size_t id = 0;
  std::vector<double> covariates;
  int treatment = 0;
  std::optional<double> outcome;
};

// An ordered, immutable collection of units. Construction does not enforce
// the invariants; call validate() (or require_valid()) before analysis.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> covariate_names, std::vector<Unit> units);

  // Builds units with ids equal to their position.
  static Dataset from_columns(std::vector<std::string> covariate_names,
                              const std::vector<std::vector<double>>& rows,
                              const std::vector<int>& treatments,
                              const std::vector<std::optional<double>>& outcomes = {});

  std::size_t size() const { return units_.size(); }
  std::size_t covariate_count() const { return covariate_names_.size(); }
  const std::vector<Unit>& units() const { return units_; }
  const Unit& unit(std::size_t i) const { return units_.at(i); }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  const std::vector<int>& treatments() const { return treatments_; }
  std::vector<double> covariate(std::size_t j) const;
  bool has_outcomes() const;
  // Throws ValidationError naming the first unit lacking an outcome.
  std::vector<double> outcomes() const;

  std::size_t treated_count() const;
  std::size_t untreated_count() const { return size() - treated_count(); }

  // New dataset holding the listed units in the given order; ids are
  // renumbered to positions in the result.
  Dataset subset(std::span<const std::size_t> ids) const;
  // Same units, selected covariate columns only.
  Dataset with_covariates(std::span<const std::size_t> columns) const;
  Dataset with_outcomes(std::span<const double> outcomes) const;
  Dataset with_treatments(std::span<const int> treatments) const;

 private:
  std::vector<std::string> covariate_names_;
  std::vector<Unit> units_;
  std::vector<int> treatments_;
};

struct Finding {
  std::string message;
  std::vector<std::size_t> unit_ids;
};

std::vector<Finding> validate(const Dataset& dataset);
// Throws ValidationError listing every finding.
void require_valid(const Dataset& dataset);

// Simulation-only ground truth.
class PotentialOutcomeTable {
 public:
  PotentialOutcomeTable() = default;
  PotentialOutcomeTable(std::vector<double> y1, std::vector<double> y0);

  std::size_t size() const { return y1_.size(); }
  const std::vector<double>& y1() const { return y1_; }
  const std::vector<double>& y0() const { return y0_; }
  double ice(std::size_t i) const { return y1_[i] - y0_[i]; }
  std::vector<double> ice() const;

 private:
  std::vector<double> y1_;
  std::vector<double> y0_;
};

// Consistency: the received treatment reveals one potential outcome.
std::vector<double> observed_from_potential(const PotentialOutcomeTable& pot,
                                            std::span<const int> treatments);

struct WeightVector {
  std::vector<double> weights;
  Estimand target = Estimand::ATE;
  std::string provenance;
  std::vector<std::string> warnings;

  WeightVector() = default;
  WeightVector(std::vector<double> w, Estimand t, std::string prov);

  std::size_t size() const { return weights.size(); }
  // Throws ValidationError when entries are negative or non-finite.
  void check_entries() const;
  // Throws ValidationError unless both groups carry positive weight.
  void require_estimable(std::span<const int> treatments) const;
  WeightVector scaled(double c) const;
};

enum class MatchKind { Pair, Full, FineStrata, Exact, Cardinality };

struct MatchStructure {
  std::vector<std::vector<std::size_t>> strata;
  std::vector<std::size_t> discarded;
  MatchKind kind = MatchKind::Full;
  // Group whose units were matched to (pair methods only).
  Group focal = Group::Treated;
  std::string method;
  double total_distance = 0.0;

  // Empty when the structural invariants hold against these treatments.
  std::vector<std::string> check(std::span<const int> treatments) const;
  std::size_t discarded_in(std::span<const int> treatments, int group) const;
};

// Type-7 (linear interpolation) sample quantile, p in [0,1].
double quantile(std::vector<double> values, double p);
double mean(std::span<const double> values);
// Sample variance with denominator n - 1; 0 for fewer than two values.
double sample_variance(std::span<const double> values);

}  // namespace etk
