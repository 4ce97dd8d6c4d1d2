#include "etk/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "etk/diagnostics.hpp"

namespace etk {
namespace {

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double z = std::exp(eta);
  return z / (1.0 + z);
}

void check_slopes(const LinearFunction& f, std::size_t p, const char* field) {
  if (f.slopes.size() > p) {
    throw ValidationError(std::string(field) + " has " + std::to_string(f.slopes.size()) +
                          " slopes but the design has " + std::to_string(p) + " covariates");
  }
}

}  // namespace

CovariateLaw CovariateLaw::bernoulli(std::string name, double p) {
  return {std::move(name), Kind::Bernoulli, p, 0.0};
}
CovariateLaw CovariateLaw::uniform(std::string name, double lo, double hi) {
  return {std::move(name), Kind::Uniform, lo, hi};
}
CovariateLaw CovariateLaw::normal(std::string name, double mu, double sd) {
  return {std::move(name), Kind::Normal, mu, sd};
}

double LinearFunction::operator()(std::span<const double> x) const {
  double v = intercept;
  for (std::size_t j = 0; j < slopes.size() && j < x.size(); ++j) v += slopes[j] * x[j];
  return v;
}

void DGPConfig::validate() const {
  if (n < 2) throw ValidationError("dgp.n must be at least 2");
  const std::size_t p = covariates.size();
  for (const auto& law : covariates) {
    switch (law.kind) {
      case CovariateLaw::Kind::Bernoulli:
        if (!(law.a >= 0.0 && law.a <= 1.0)) {
          throw ValidationError("covariate '" + law.name + "': probability outside [0,1]");
        }
        break;
      case CovariateLaw::Kind::Uniform:
        if (!(law.a < law.b)) throw ValidationError("covariate '" + law.name + "': empty range");
        break;
      case CovariateLaw::Kind::Normal:
        if (!(law.b >= 0.0)) throw ValidationError("covariate '" + law.name + "': negative SD");
        break;
    }
  }
  check_slopes(treatment, p, "dgp.treatment");
  check_slopes(baseline, p, "dgp.baseline");
  check_slopes(effect, p, "dgp.effect");
  if (!(noise_sd >= 0.0)) throw ValidationError("dgp.noise_sd must be nonnegative");
  for (std::size_t r = 0; r < hard_regions.size(); ++r) {
    const auto& h = hard_regions[r];
    if (h.covariate >= p) throw ValidationError("hard region names an unknown covariate");
    if (!(h.lo < h.hi)) throw ValidationError("hard region has an empty interval");
    if (h.score != 0.0 && h.score != 1.0) throw ValidationError("hard region score must be 0 or 1");
    for (std::size_t q = 0; q < r; ++q) {
      const auto& g = hard_regions[q];
      if (g.covariate == h.covariate && g.lo < h.hi && h.lo < g.hi) {
        throw ValidationError("hard regions overlap");
      }
    }
  }
  if (frailty) {
    const auto& f = *frailty;
    if (!(f.lo > 0.0 && f.lo < f.hi && f.hi < 1.0)) {
      throw ValidationError("frailty window must satisfy 0 < lo < hi < 1");
    }
    if (!(f.prevalence >= 0.0 && f.prevalence <= 1.0)) {
      throw ValidationError("frailty prevalence must lie in [0,1]");
    }
  }
}

SimulatedData generate(const DGPConfig& config) {
  config.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                    static_cast<std::uint32_t>(config.seed >> 32)};
  std::mt19937_64 engine(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t p = config.covariates.size();
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) {
    names.push_back(config.covariates[j].name.empty() ? "X" + std::to_string(j + 1)
                                                      : config.covariates[j].name);
  }

  std::vector<std::vector<double>> rows(config.n, std::vector<double>(p));
  std::vector<int> t(config.n);
  std::vector<double> y1(config.n), y0(config.n), scores(config.n);
  std::vector<std::optional<double>> observed(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    auto& x = rows[i];
    for (std::size_t j = 0; j < p; ++j) {
      const auto& law = config.covariates[j];
      switch (law.kind) {
        case CovariateLaw::Kind::Bernoulli: x[j] = unit(engine) < law.a ? 1.0 : 0.0; break;
        case CovariateLaw::Kind::Uniform: x[j] = law.a + (law.b - law.a) * unit(engine); break;
        case CovariateLaw::Kind::Normal: x[j] = law.a + law.b * gauss(engine); break;
      }
    }
    const double eta = config.treatment(x);
    double score = sigmoid(eta);
    bool forced = false;
    for (const auto& h : config.hard_regions) {
      if (x[h.covariate] >= h.lo && x[h.covariate] < h.hi) {
        score = h.score;
        forced = true;
        break;
      }
    }
    double y0_shift = 0.0;
    if (config.frailty && !forced) {
      const auto& f = *config.frailty;
      const double u = unit(engine);
      if ((score < f.lo || score > f.hi) && u < f.prevalence) {
        score = sigmoid(eta + f.logit_shift);
        y0_shift = f.y0_shift;
      }
    }
    scores[i] = score;
    t[i] = unit(engine) < score ? 1 : 0;
    const double base = config.baseline(x);
    y0[i] = base + y0_shift + config.noise_sd * gauss(engine);
    y1[i] = base + config.effect(x) + config.noise_sd * gauss(engine);
    observed[i] = t[i] == 1 ? y1[i] : y0[i];
  }
  SimulatedData out;
  out.dataset = Dataset::from_columns(std::move(names), rows, t, observed);
  out.potential = PotentialOutcomeTable(std::move(y1), std::move(y0));
  out.true_scores = std::move(scores);
  return out;
}

double TrueEstimands::get(Estimand e) const {
  switch (e) {
    case Estimand::ATE: return ate;
    case Estimand::ATT: return att;
    case Estimand::ATU: return atu;
    case Estimand::ATO:
      if (!ato) throw ValidationError("true ATO needs propensity scores with positive overlap mass");
      return *ato;
  }
  return ate;
}

TrueEstimands true_estimands(const PotentialOutcomeTable& pot, std::span<const int> treatments,
                             std::optional<std::span<const double>> scores) {
  if (treatments.size() != pot.size()) {
    throw ValidationError("treatment vector length does not match the potential outcome table");
  }
  double all = 0.0, treated = 0.0, untreated = 0.0;
  std::size_t n_t = 0, n_c = 0;
  for (std::size_t i = 0; i < pot.size(); ++i) {
    const double ice = pot.ice(i);
    all += ice;
    if (treatments[i] == 1) {
      treated += ice;
      ++n_t;
    } else {
      untreated += ice;
      ++n_c;
    }
  }
  if (n_t == 0 || n_c == 0) throw ValidationError("true estimands need both treatment groups");
  TrueEstimands out;
  out.ate = all / static_cast<double>(pot.size());
  out.att = treated / static_cast<double>(n_t);
  out.atu = untreated / static_cast<double>(n_c);
  if (scores) {
    if (scores->size() != pot.size()) throw ValidationError("score vector length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pot.size(); ++i) {
      const double h = (*scores)[i] * (1.0 - (*scores)[i]);
      num += h * pot.ice(i);
      den += h;
    }
    if (den > 0.0) out.ato = num / den;
  }
  return out;
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate) {
  return replicate_engine(seed, replicate)();
}

BiasEvaluation evaluate_bias(const DGPConfig& config, const Pipeline& pipeline, Estimand target,
                             std::size_t replications, std::uint64_t seed) {
  if (replications < 1) throw ValidationError("bias evaluation needs at least one replication");
  config.validate();
  BiasEvaluation eval;
  eval.target = target;
  std::vector<double> errors;
  for (std::size_t r = 0; r < replications; ++r) {
    DGPConfig cfg = config;
    cfg.seed = replicate_seed(seed, r);
    const SimulatedData sim = generate(cfg);
    const auto& t = sim.dataset.treatments();
    if (sim.dataset.treated_count() == 0 || sim.dataset.untreated_count() == 0) {
      throw SolverError("replicate " + std::to_string(r) + " (seed " + std::to_string(cfg.seed) +
                        ") drew a single treatment group");
    }
    const double truth = true_estimands(sim.potential, t, sim.true_scores).get(target);
    if (!overlap_report(sim.true_scores, t).feasible.at(target)) ++eval.infeasible;
    EffectEstimate est;
    try {
      est = pipeline(sim.dataset);
    } catch (const Error& e) {
      throw SolverError("pipeline failed on replicate " + std::to_string(r) + " (seed " +
                        std::to_string(cfg.seed) + "): " + e.what());
    }
    eval.estimates.push_back(est.point);
    eval.truths.push_back(truth);
    eval.reported.push_back(est.estimand);
    eval.seeds.push_back(cfg.seed);
    errors.push_back(est.point - truth);
  }
  eval.mean_bias = mean(errors);
  double ss = 0.0;
  for (double e : errors) ss += e * e;
  eval.rmse = std::sqrt(ss / static_cast<double>(errors.size()));
  eval.mc_se = std::sqrt(sample_variance(errors) / static_cast<double>(errors.size()));
  return eval;
}

namespace scenarios {

DGPConfig saturated_binary(std::size_t n) {
  DGPConfig c;
  c.n = n;
  c.covariates = {CovariateLaw::bernoulli("X", 0.5)};
  c.treatment = {std::log(1.5), {std::log(0.25) - std::log(1.5)}};  // scores 0.6 and 0.2
  c.baseline = {45.0, {20.0}};
  c.effect = {16.0, {-22.0}};
  c.noise_sd = 10.0;
  return c;
}

DGPConfig overlap_a(std::size_t n) {
  DGPConfig c;
  c.n = n;
  c.covariates = {CovariateLaw::uniform("X", 0.0, 1.0)};
  c.treatment = {0.0, {0.0}};
  c.hard_regions = {{0, 0.0, 0.5, 0.0}};
  c.baseline = {50.0, {-20.0}};
  c.effect = {10.0, {-10.0}};
  c.noise_sd = 5.0;
  return c;
}

DGPConfig overlap_b(std::size_t n) {
  DGPConfig c = overlap_a(n);
  c.hard_regions = {{0, 0.0, 1.0 / 3.0, 0.0}, {0, 2.0 / 3.0, 1.0, 1.0}};
  return c;
}

DGPConfig tail_frailty(std::size_t n) {
  DGPConfig c;
  c.n = n;
  c.covariates = {CovariateLaw::normal("X", 0.0, 1.0)};
  c.treatment = {0.0, {1.5}};
  c.baseline = {50.0, {5.0}};
  c.effect = {10.0, {0.0}};
  c.noise_sd = 5.0;
  c.frailty = FrailtyConfig{0.2, 0.8, 0.5, 3.0, -10.0};
  return c;
}

std::vector<std::string> names() {
  return {"saturated-binary", "overlap-a", "overlap-b", "tail-frailty"};
}

DGPConfig by_name(const std::string& name, std::size_t n) {
  if (name == "saturated-binary") return saturated_binary(n);
  if (name == "overlap-a") return overlap_a(n);
  if (name == "overlap-b") return overlap_b(n);
  if (name == "tail-frailty") return tail_frailty(n);
  throw ValidationError("unknown scenario '" + name +
                        "' (known: saturated-binary, overlap-a, overlap-b, tail-frailty)");
}

}  // namespace scenarios
}  // namespace etk
