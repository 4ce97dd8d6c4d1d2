#include "etk/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace etk {

std::string_view to_string(Estimand e) {
  switch (e) {
    case Estimand::ATT: return "ATT";
    case Estimand::ATU: return "ATU";
    case Estimand::ATE: return "ATE";
    case Estimand::ATO: return "ATO";
  }
  return "?";
}

Estimand parse_estimand(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (Estimand e : kAllEstimands) {
    if (upper == to_string(e)) return e;
  }
  throw ValidationError("unknown estimand '" + std::string(name) +
                        "' (expected att, atu, ate or ato)");
}

Dataset::Dataset(std::vector<std::string> covariate_names, std::vector<Unit> units)
    : covariate_names_(std::move(covariate_names)), units_(std::move(units)) {
  treatments_.reserve(units_.size());
  for (const Unit& u : units_) treatments_.push_back(u.treatment);
}

Dataset Dataset::from_columns(std::vector<std::string> covariate_names,
                              const std::vector<std::vector<double>>& rows,
                              const std::vector<int>& treatments,
                              const std::vector<std::optional<double>>& outcomes) {
  if (rows.size() != treatments.size() ||
      (!outcomes.empty() && outcomes.size() != treatments.size())) {
    throw ValidationError("column lengths disagree");
  }
  std::vector<Unit> units(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    units[i].id = i;
    units[i].covariates = rows[i];
    units[i].treatment = treatments[i];
    if (!outcomes.empty()) units[i].outcome = outcomes[i];
  }
  return Dataset(std::move(covariate_names), std::move(units));
}

std::vector<double> Dataset::covariate(std::size_t j) const {
  if (j >= covariate_count()) throw ValidationError("covariate index out of range");
  std::vector<double> column;
  column.reserve(size());
  for (const Unit& u : units_) column.push_back(u.covariates.at(j));
  return column;
}

bool Dataset::has_outcomes() const {
  return !units_.empty() &&
         std::all_of(units_.begin(), units_.end(),
                     [](const Unit& u) { return u.outcome.has_value(); });
}

std::vector<double> Dataset::outcomes() const {
  std::vector<double> y;
  y.reserve(size());
  for (const Unit& u : units_) {
    if (!u.outcome) {
      throw ValidationError("unit " + std::to_string(u.id) +
                            " has no outcome; estimation requires outcomes");
    }
    y.push_back(*u.outcome);
  }
  return y;
}

std::size_t Dataset::treated_count() const {
  return static_cast<std::size_t>(std::count(treatments_.begin(), treatments_.end(), 1));
}

Dataset Dataset::subset(std::span<const std::size_t> ids) const {
  std::vector<Unit> units;
  units.reserve(ids.size());
  for (std::size_t id : ids) {
    Unit u = units_.at(id);
    u.id = units.size();
    units.push_back(std::move(u));
  }
  return Dataset(covariate_names_, std::move(units));
}

Dataset Dataset::with_covariates(std::span<const std::size_t> columns) const {
  std::vector<std::string> names;
  for (std::size_t c : columns) names.push_back(covariate_names_.at(c));
  std::vector<Unit> units = units_;
  for (Unit& u : units) {
    std::vector<double> x;
    for (std::size_t c : columns) x.push_back(u.covariates.at(c));
    u.covariates = std::move(x);
  }
  return Dataset(std::move(names), std::move(units));
}

Dataset Dataset::with_outcomes(std::span<const double> outcomes) const {
  if (outcomes.size() != size()) throw ValidationError("outcome length mismatch");
  std::vector<Unit> units = units_;
  for (std::size_t i = 0; i < units.size(); ++i) units[i].outcome = outcomes[i];
  return Dataset(covariate_names_, std::move(units));
}

Dataset Dataset::with_treatments(std::span<const int> treatments) const {
  if (treatments.size() != size()) throw ValidationError("treatment length mismatch");
  std::vector<Unit> units = units_;
  for (std::size_t i = 0; i < units.size(); ++i) units[i].treatment = treatments[i];
  return Dataset(covariate_names_, std::move(units));
}

std::vector<Finding> validate(const Dataset& dataset) {
  std::vector<Finding> findings;
  const std::size_t arity = dataset.covariate_count();
  Finding arity_bad{"covariate arity differs from the number of covariate names", {}};
  Finding nonfinite{"non-finite covariate value", {}};
  Finding bad_treatment{"treatment indicator is not 0 or 1", {}};
  Finding bad_id{"unit id does not equal its input position", {}};
  Finding bad_outcome{"non-finite outcome", {}};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Unit& u = dataset.unit(i);
    if (u.id != i) bad_id.unit_ids.push_back(i);
    if (u.covariates.size() != arity) arity_bad.unit_ids.push_back(i);
    if (std::any_of(u.covariates.begin(), u.covariates.end(),
                    [](double v) { return !std::isfinite(v); })) {
      nonfinite.unit_ids.push_back(i);
    }
    if (u.treatment != 0 && u.treatment != 1) bad_treatment.unit_ids.push_back(i);
    if (u.outcome && !std::isfinite(*u.outcome)) bad_outcome.unit_ids.push_back(i);
  }
  for (Finding* f : {&bad_id, &arity_bad, &nonfinite, &bad_treatment, &bad_outcome}) {
    if (!f->unit_ids.empty()) findings.push_back(std::move(*f));
  }
  if (dataset.treated_count() == 0) findings.push_back({"no treated units", {}});
  if (std::count(dataset.treatments().begin(), dataset.treatments().end(), 0) == 0) {
    findings.push_back({"no untreated units", {}});
  }
  return findings;
}

void require_valid(const Dataset& dataset) {
  const auto findings = validate(dataset);
  if (findings.empty()) return;
  std::ostringstream msg;
  msg << "invalid dataset:";
  for (const Finding& f : findings) {
    msg << "\n  " << f.message;
    if (!f.unit_ids.empty()) {
      msg << " (units";
      for (std::size_t k = 0; k < f.unit_ids.size() && k < 10; ++k) msg << ' ' << f.unit_ids[k];
      if (f.unit_ids.size() > 10) msg << " ...";
      msg << ')';
    }
  }
  throw ValidationError(msg.str());
}

PotentialOutcomeTable::PotentialOutcomeTable(std::vector<double> y1, std::vector<double> y0)
    : y1_(std::move(y1)), y0_(std::move(y0)) {
  if (y1_.size() != y0_.size()) {
    throw ValidationError("potential outcome columns differ in length");
  }
}

std::vector<double> PotentialOutcomeTable::ice() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = ice(i);
  return out;
}

std::vector<double> observed_from_potential(const PotentialOutcomeTable& pot,
                                            std::span<const int> treatments) {
  if (treatments.size() != pot.size()) {
    throw ValidationError("treatment vector length " + std::to_string(treatments.size()) +
                          " does not match potential outcome table length " +
                          std::to_string(pot.size()));
  }
  std::vector<double> y(pot.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = treatments[i] == 1 ? pot.y1()[i] : pot.y0()[i];
  }
  return y;
}

WeightVector::WeightVector(std::vector<double> w, Estimand t, std::string prov)
    : weights(std::move(w)), target(t), provenance(std::move(prov)) {
  check_entries();
}

void WeightVector::check_entries() const {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw ValidationError("weight of unit " + std::to_string(i) +
                            " is negative or non-finite");
    }
  }
}

void WeightVector::require_estimable(std::span<const int> treatments) const {
  if (treatments.size() != weights.size()) {
    throw ValidationError("weight vector length " + std::to_string(weights.size()) +
                          " does not match " + std::to_string(treatments.size()) + " units");
  }
  double treated = 0.0, untreated = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    (treatments[i] == 1 ? treated : untreated) += weights[i];
  }
  if (!(treated > 0.0)) throw ValidationError("no treated unit has positive weight");
  if (!(untreated > 0.0)) throw ValidationError("no untreated unit has positive weight");
}

WeightVector WeightVector::scaled(double c) const {
  WeightVector out = *this;
  for (double& w : out.weights) w *= c;
  out.check_entries();
  return out;
}

std::vector<std::string> MatchStructure::check(std::span<const int> treatments) const {
  std::vector<std::string> problems;
  std::set<std::size_t> seen;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    bool has_t = false, has_c = false;
    for (std::size_t id : strata[s]) {
      if (id >= treatments.size()) {
        problems.push_back("stratum " + std::to_string(s) + " names unknown unit " +
                           std::to_string(id));
        continue;
      }
      if (!seen.insert(id).second) {
        problems.push_back("unit " + std::to_string(id) + " appears twice");
      }
      (treatments[id] == 1 ? has_t : has_c) = true;
    }
    if (!has_t || !has_c) {
      problems.push_back("stratum " + std::to_string(s) + " lacks a treatment group");
    }
  }
  for (std::size_t id : discarded) {
    if (id >= treatments.size()) {
      problems.push_back("discarded set names unknown unit " + std::to_string(id));
    } else if (!seen.insert(id).second) {
      problems.push_back("unit " + std::to_string(id) + " both matched and discarded");
    }
  }
  return problems;
}

std::size_t MatchStructure::discarded_in(std::span<const int> treatments, int group) const {
  return static_cast<std::size_t>(std::count_if(
      discarded.begin(), discarded.end(),
      [&](std::size_t id) { return treatments[id] == group; }));
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

}  // namespace etk
