#include "etk/estimation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "etk/propensity.hpp"
#include "etk/weighting.hpp"

namespace etk {
namespace {

struct GroupSums {
  double weight = 0.0;
  double weighted_outcome = 0.0;
};

std::pair<GroupSums, GroupSums> weighted_sums(const Dataset& dataset, const WeightVector& weights) {
  if (weights.size() != dataset.size()) {
    throw ValidationError("weight vector length does not match the dataset");
  }
  weights.require_estimable(dataset.treatments());
  const auto y = dataset.outcomes();
  GroupSums t, c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    GroupSums& g = dataset.treatments()[i] == 1 ? t : c;
    g.weight += weights.weights[i];
    g.weighted_outcome += weights.weights[i] * y[i];
  }
  return {t, c};
}

EffectEstimate labeled(const Dataset& dataset, const WeightVector& weights, Measure measure) {
  EffectEstimate est;
  est.estimand = weights.target;
  est.measure = measure;
  est.method = weights.provenance;
  est.warnings = weights.warnings;
  est.ess_treated = ess(weights.weights, dataset.treatments(), Group::Treated);
  est.ess_untreated = ess(weights.weights, dataset.treatments(), Group::Untreated);
  return est;
}

struct LinearFit {
  Eigen::VectorXd coefficients;
};

Eigen::MatrixXd outcome_design(const Dataset& dataset, const std::vector<std::size_t>& rows) {
  const auto p = static_cast<Eigen::Index>(dataset.covariate_count());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), p + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x(static_cast<Eigen::Index>(r), 0) = 1.0;
    const auto& cov = dataset.unit(rows[r]).covariates;
    for (Eigen::Index j = 0; j < p; ++j) {
      x(static_cast<Eigen::Index>(r), j + 1) = cov[static_cast<std::size_t>(j)];
    }
  }
  return x;
}

LinearFit fit_group(const Dataset& dataset, const std::vector<double>& y, int group) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.treatments()[i] == group) rows.push_back(i);
  }
  const Eigen::MatrixXd x = outcome_design(dataset, rows);
  Eigen::VectorXd target(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) target(static_cast<Eigen::Index>(r)) = y[rows[r]];
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) {
    throw ValidationError(std::string("outcome model design is rank deficient in the ") +
                          (group == 1 ? "treated" : "untreated") + " group");
  }
  return {qr.solve(target)};
}

}  // namespace

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::MeanDifference: return "mean-difference";
    case Measure::RiskRatio: return "risk-ratio";
    case Measure::OddsRatio: return "odds-ratio";
  }
  return "?";
}

Measure parse_measure(std::string_view name) {
  for (Measure m : {Measure::MeanDifference, Measure::RiskRatio, Measure::OddsRatio}) {
    if (name == to_string(m)) return m;
  }
  throw ValidationError("unknown effect measure '" + std::string(name) +
                        "' (expected mean-difference, risk-ratio or odds-ratio)");
}

EffectEstimate hajek_contrast(const Dataset& dataset, const WeightVector& weights,
                              Measure measure) {
  if (measure != Measure::MeanDifference) return ratio_measure(dataset, weights, measure);
  const auto [t, c] = weighted_sums(dataset, weights);
  EffectEstimate est = labeled(dataset, weights, measure);
  est.treated_mean = t.weighted_outcome / t.weight;
  est.untreated_mean = c.weighted_outcome / c.weight;
  est.point = est.treated_mean - est.untreated_mean;
  return est;
}

EffectEstimate ratio_measure(const Dataset& dataset, const WeightVector& weights,
                             Measure measure) {
  if (measure == Measure::MeanDifference) {
    throw ValidationError("ratio_measure needs risk-ratio or odds-ratio");
  }
  for (const Unit& u : dataset.units()) {
    if (u.outcome && *u.outcome != 0.0 && *u.outcome != 1.0) {
      throw ValidationError("ratio measures need 0/1 outcomes; unit " + std::to_string(u.id) +
                            " has outcome " + std::to_string(*u.outcome));
    }
  }
  const auto [t, c] = weighted_sums(dataset, weights);
  const double pt = t.weighted_outcome / t.weight;
  const double pc = c.weighted_outcome / c.weight;
  EffectEstimate est = labeled(dataset, weights, measure);
  est.treated_mean = pt;
  est.untreated_mean = pc;
  if (measure == Measure::RiskRatio) {
    if (pc == 0.0) throw ValidationError("risk ratio undefined: untreated weighted proportion is 0");
    est.point = pt / pc;
  } else {
    if (pt <= 0.0 || pt >= 1.0 || pc <= 0.0 || pc >= 1.0) {
      throw ValidationError("odds ratio undefined: a weighted proportion is exactly 0 or 1");
    }
    est.point = (pt / (1.0 - pt)) / (pc / (1.0 - pc));
  }
  return est;
}

EffectEstimate stratified_estimate(const Dataset& dataset, const MatchStructure& ms,
                                   Estimand target) {
  const auto& tr = dataset.treatments();
  const auto problems = ms.check(tr);
  if (!problems.empty()) throw ValidationError("invalid match structure: " + problems.front());
  const auto y = dataset.outcomes();

  double total_weight = 0.0, acc = 0.0;
  for (std::size_t s = 0; s < ms.strata.size(); ++s) {
    double sum_t = 0.0, sum_c = 0.0, n_t = 0.0, n_c = 0.0;
    for (std::size_t id : ms.strata[s]) {
      if (tr[id] == 1) {
        sum_t += y[id];
        n_t += 1.0;
      } else {
        sum_c += y[id];
        n_c += 1.0;
      }
    }
    if (n_t == 0.0 || n_c == 0.0) {
      throw ValidationError("stratum " + std::to_string(s) + " lacks a treatment group");
    }
    const double weight = target == Estimand::ATT   ? n_t
                          : target == Estimand::ATU ? n_c
                                                    : n_t + n_c;
    acc += weight * (sum_t / n_t - sum_c / n_c);
    total_weight += weight;
  }

  EffectEstimate est;
  est.estimand = target;
  est.point = acc / total_weight;
  est.method = ms.method + " (stratified difference in means)";
  const std::size_t lost_t = ms.discarded_in(tr, 1), lost_c = ms.discarded_in(tr, 0);
  if ((target == Estimand::ATT && lost_t > 0) || (target == Estimand::ATU && lost_c > 0) ||
      (target == Estimand::ATE && lost_t + lost_c > 0)) {
    est.estimand = Estimand::ATO;
    est.warnings.push_back("target-group units were discarded; the estimand changes from " +
                           std::string(to_string(target)) + " to ATO");
  }
  return est;
}

EffectEstimate g_computation(const Dataset& dataset, Estimand target,
                             std::optional<std::span<const double>> population_weights) {
  require_valid(dataset);
  const auto y = dataset.outcomes();
  const LinearFit fit1 = fit_group(dataset, y, 1);
  const LinearFit fit0 = fit_group(dataset, y, 0);
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), 0);
  const Eigen::MatrixXd x = outcome_design(dataset, all);
  const Eigen::VectorXd y1_hat = x * fit1.coefficients;
  const Eigen::VectorXd y0_hat = x * fit0.coefficients;

  std::vector<double> h(dataset.size(), 1.0);
  std::string population;
  if (population_weights) {
    if (population_weights->size() != dataset.size()) {
      throw ValidationError("population weight vector length does not match the dataset");
    }
    h.assign(population_weights->begin(), population_weights->end());
    population = "supplied population weights";
  } else if (target == Estimand::ATO) {
    const auto model = fit_logistic(dataset);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = model.scores[i] * (1.0 - model.scores[i]);
    population = "overlap tilting e(1-e)";
  } else {
    for (std::size_t i = 0; i < h.size(); ++i) {
      const int t = dataset.treatments()[i];
      if (target == Estimand::ATT) h[i] = t == 1 ? 1.0 : 0.0;
      if (target == Estimand::ATU) h[i] = t == 0 ? 1.0 : 0.0;
    }
  }

  double sum_h = 0.0, m1 = 0.0, m0 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    sum_h += h[i];
    m1 += h[i] * y1_hat(k);
    m0 += h[i] * y0_hat(k);
  }
  if (!(sum_h > 0.0)) throw ValidationError("g-computation target population has zero weight");
  EffectEstimate est;
  est.estimand = target;
  est.treated_mean = m1 / sum_h;
  est.untreated_mean = m0 / sum_h;
  est.point = est.treated_mean - est.untreated_mean;
  est.method = "g-computation (treatment-interacted linear outcome model)";
  if (!population.empty()) est.method += ", " + population;
  return est;
}

Subgroup make_subgroup(const Dataset& dataset, const UnitPredicate& in_subgroup,
                       const std::string& label) {
  std::vector<std::size_t> ids;
  for (const Unit& u : dataset.units()) {
    if (in_subgroup(u)) ids.push_back(u.id);
  }
  Subgroup out;
  out.label = label;
  out.dataset = dataset.subset(ids);
  const Dataset& sub = out.dataset;
  if (sub.treated_count() == 0 || sub.untreated_count() == 0) {
    throw ValidationError("subgroup '" + label + "' does not contain both treatment groups");
  }
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < sub.covariate_count(); ++j) {
    const auto col = sub.covariate(j);
    const bool constant =
        std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); });
    if (constant) {
      out.dropped.push_back(sub.covariate_names()[j]);
    } else {
      keep.push_back(j);
    }
  }
  if (!out.dropped.empty()) out.dataset = sub.with_covariates(keep);
  for (const auto& name : out.dropped) {
    out.warnings.push_back("covariate '" + name +
                           "' is constant within the subgroup and was dropped");
  }
  return out;
}

EffectEstimate subgroup_estimate(const Dataset& dataset, const UnitPredicate& in_subgroup,
                                 const Pipeline& pipeline, const std::string& label) {
  const Subgroup sub = make_subgroup(dataset, in_subgroup, label);
  EffectEstimate est = pipeline(sub.dataset);
  est.population = "subgroup " + label;
  est.warnings.insert(est.warnings.end(), sub.warnings.begin(), sub.warnings.end());
  return est;
}

std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

BootstrapResult bootstrap(const Dataset& dataset, const Pipeline& pipeline,
                          std::size_t replicates, std::uint64_t seed) {
  if (replicates < 2) throw ValidationError("bootstrap needs at least 2 replicates");
  if (dataset.size() == 0) throw ValidationError("bootstrap of an empty dataset");
  BootstrapResult result;
  std::string first_failure;
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::vector<std::size_t> ids(dataset.size());
  for (std::size_t b = 0; b < replicates; ++b) {
    auto engine = replicate_engine(seed, b);
    for (auto& id : ids) id = pick(engine);
    try {
      result.replicates.push_back(pipeline(dataset.subset(ids)).point);
    } catch (const Error& e) {
      if (result.failures++ == 0) {
        first_failure = "replicate " + std::to_string(b) + ": " + e.what();
      }
    }
  }
  if (static_cast<double>(result.failures) > 0.1 * static_cast<double>(replicates)) {
    throw SolverError("bootstrap aborted: " + std::to_string(result.failures) + " of " +
                      std::to_string(replicates) + " replicates failed (first: " + first_failure +
                      ")");
  }
  result.se = std::sqrt(sample_variance(result.replicates));
  result.lower = quantile(result.replicates, 0.025);
  result.upper = quantile(result.replicates, 0.975);
  return result;
}

}  // namespace etk
