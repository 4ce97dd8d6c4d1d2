#include <fstream>
#include <set>
#include <sstream>

#include "cli.hpp"

namespace etk::cli {
namespace {

class Reader {
 public:
  Reader(const Json& j, std::string scope) : j_(j), scope_(std::move(scope)) {
    if (!j_.is_object()) throw ValidationError(scope_ + ": expected a JSON object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  std::string where(const char* key) const {
    return scope_.empty() ? std::string("'") + key + "'" : "'" + scope_ + "." + key + "'";
  }

  const Json& at(const char* key) const { return j_.at(key); }

  template <typename T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    out = value<T>(key, j_.at(key));
  }

  template <typename T>
  void get(const char* key, std::optional<T>& out) {
    if (!has(key)) return;
    out = value<T>(key, j_.at(key));
  }

  void get_strings(const char* key, std::vector<std::string>& out) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    out.clear();
    if (v.is_string()) {
      // Comma-separated list, as on the command line.
      std::stringstream ss(v.get<std::string>());
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
      }
      return;
    }
    if (!v.is_array()) throw ValidationError(where(key) + ": expected a list of names");
    for (const Json& e : v) out.push_back(value<std::string>(key, e));
  }

  void get_numbers(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    out.clear();
    if (v.is_number()) {
      out.push_back(v.get<double>());
      return;
    }
    if (!v.is_array()) throw ValidationError(where(key) + ": expected a number or list of numbers");
    for (const Json& e : v) out.push_back(value<double>(key, e));
  }

  void get_pair(const char* key, std::optional<std::pair<double, double>>& out) {
    if (!has(key)) return;
    std::vector<double> v;
    get_numbers(key, v);
    if (v.size() != 2) throw ValidationError(where(key) + ": expected two numbers [lo, hi]");
    out = std::make_pair(v[0], v[1]);
  }

  void reject_unknown() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ValidationError("unknown configuration key " + where(k.c_str()));
    }
  }

 private:
  template <typename T>
  T value(const char* key, const Json& v) const {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ValidationError(where(key) + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ValidationError(where(key) + ": expected a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ValidationError(where(key) + ": expected true or false");
      return v.get<bool>();
    } else {
      static_assert(std::is_integral_v<T>);
      if (!v.is_number_integer()) throw ValidationError(where(key) + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<std::int64_t>() < 0) {
          throw ValidationError(where(key) + ": expected a nonnegative integer");
        }
      }
      return v.get<T>();
    }
  }

  const Json& j_;
  std::string scope_;
  std::set<std::string> seen_;
};

void read_method(Reader& r, MethodConfig& m) {
  r.get("estimand", m.estimand);
  r.get("method", m.method);
  r.get("measure", m.measure);
  r.get("caliper", m.caliper);
  r.get("ratio", m.ratio);
  r.get("strata", m.strata);
  r.get_numbers("delta", m.delta);
  r.get("cem-bins", m.cem_bins);
  r.get("distance", m.distance);
  r.get("pair-solver", m.pair_solver);
  r.get_pair("trim-window", m.trim_window);
  r.get("trim-percentile", m.trim_percentile);
}

LinearFunction linear_from_json(const Json& j, const std::string& scope) {
  Reader r(j, scope);
  LinearFunction f;
  r.get("intercept", f.intercept);
  r.get_numbers("slopes", f.slopes);
  r.reject_unknown();
  return f;
}

}  // namespace

Estimand MethodConfig::parsed_estimand() const {
  if (estimand.empty()) throw ValidationError("parameter 'estimand' is required");
  return parse_estimand(estimand);
}

Method MethodConfig::parsed_method() const {
  if (method.empty()) throw ValidationError("parameter 'method' is required");
  return parse_method(method);
}

Measure MethodConfig::parsed_measure() const { return parse_measure(measure); }

MethodParams MethodConfig::params() const {
  MethodParams p;
  if (distance == "logit") {
    p.match.distance = Distance::LogitScore;
  } else if (distance == "euclidean") {
    p.match.distance = Distance::CovariateEuclidean;
  } else {
    throw ValidationError("parameter 'distance': expected 'logit' or 'euclidean', found '" +
                          distance + "'");
  }
  if (pair_solver == "optimal") {
    p.pair_solver = PairSolver::Optimal;
  } else if (pair_solver == "greedy") {
    p.pair_solver = PairSolver::Greedy;
  } else {
    throw ValidationError("parameter 'pair-solver': expected 'optimal' or 'greedy', found '" +
                          pair_solver + "'");
  }
  p.match.caliper = caliper;
  p.match.ratio = ratio;
  p.match.strata_count = strata;
  p.match.cem_bins = cem_bins;
  p.match.balance_tolerance = delta;
  p.match.validate();
  if (trim_window && trim_percentile) {
    throw ValidationError("parameters 'trim-window' and 'trim-percentile' are mutually exclusive");
  }
  if (trim_window) p.trim = TrimSpec::window(trim_window->first, trim_window->second);
  if (trim_percentile) p.trim = TrimSpec::cap(*trim_percentile);
  p.trim.validate();
  return p;
}

DGPConfig SimConfig::resolved_dgp() const {
  if (scenario && dgp) throw ValidationError("give either 'scenario' or 'dgp', not both");
  if (!scenario && !dgp) throw ValidationError("simulation needs a 'scenario' or a 'dgp' section");
  DGPConfig c = scenario ? scenarios::by_name(*scenario, n) : *dgp;
  c.validate();
  return c;
}

RunConfig run_config_from_json(const Json& j) {
  Reader r(j, "");
  RunConfig c;
  r.get("data", c.data);
  r.get("treatment", c.treatment);
  r.get("outcome", c.outcome);
  r.get_strings("covariates", c.covariates);
  read_method(r, c.method);
  std::optional<std::pair<double, double>> window;
  r.get_pair("window", window);
  if (window) c.window = *window;
  r.get("balance-threshold", c.balance_threshold);
  r.get("bootstrap", c.bootstrap);
  r.get("seed", c.seed);
  r.get("subgroup", c.subgroup);
  r.get("output", c.output);
  r.reject_unknown();
  return c;
}

DGPConfig dgp_from_json(const Json& j) {
  Reader r(j, "dgp");
  DGPConfig c;
  r.get("n", c.n);
  if (r.has("covariates")) {
    const Json& list = r.at("covariates");
    if (!list.is_array()) throw ValidationError("'dgp.covariates': expected a list");
    for (std::size_t k = 0; k < list.size(); ++k) {
      Reader cr(list[k], "dgp.covariates[" + std::to_string(k) + "]");
      std::string name = "X" + std::to_string(k + 1);
      std::string law;
      cr.get("name", name);
      cr.get("law", law);
      if (law == "bernoulli") {
        double p = 0.5;
        cr.get("p", p);
        c.covariates.push_back(CovariateLaw::bernoulli(name, p));
      } else if (law == "uniform") {
        double lo = 0.0, hi = 1.0;
        cr.get("lo", lo);
        cr.get("hi", hi);
        c.covariates.push_back(CovariateLaw::uniform(name, lo, hi));
      } else if (law == "normal") {
        double mean = 0.0, sd = 1.0;
        cr.get("mean", mean);
        cr.get("sd", sd);
        c.covariates.push_back(CovariateLaw::normal(name, mean, sd));
      } else {
        throw ValidationError(cr.where("law") +
                              ": expected 'bernoulli', 'uniform' or 'normal', found '" + law + "'");
      }
      cr.reject_unknown();
    }
  }
  if (r.has("treatment")) c.treatment = linear_from_json(r.at("treatment"), "dgp.treatment");
  if (r.has("baseline")) c.baseline = linear_from_json(r.at("baseline"), "dgp.baseline");
  if (r.has("effect")) c.effect = linear_from_json(r.at("effect"), "dgp.effect");
  r.get("noise-sd", c.noise_sd);
  if (r.has("hard-regions")) {
    const Json& list = r.at("hard-regions");
    if (!list.is_array()) throw ValidationError("'dgp.hard-regions': expected a list");
    for (std::size_t k = 0; k < list.size(); ++k) {
      Reader hr(list[k], "dgp.hard-regions[" + std::to_string(k) + "]");
      HardRegion h;
      std::string name;
      hr.get("covariate", name);
      const auto it = std::find_if(c.covariates.begin(), c.covariates.end(),
                                   [&](const CovariateLaw& law) { return law.name == name; });
      if (it == c.covariates.end()) {
        throw ValidationError(hr.where("covariate") + ": unknown covariate '" + name + "'");
      }
      h.covariate = static_cast<std::size_t>(it - c.covariates.begin());
      hr.get("lo", h.lo);
      hr.get("hi", h.hi);
      hr.get("score", h.score);
      hr.reject_unknown();
      c.hard_regions.push_back(h);
    }
  }
  if (r.has("frailty")) {
    Reader fr(r.at("frailty"), "dgp.frailty");
    FrailtyConfig f;
    fr.get("lo", f.lo);
    fr.get("hi", f.hi);
    fr.get("prevalence", f.prevalence);
    fr.get("logit-shift", f.logit_shift);
    fr.get("y0-shift", f.y0_shift);
    fr.reject_unknown();
    c.frailty = f;
  }
  r.reject_unknown();
  return c;
}

SimConfig sim_config_from_json(const Json& j) {
  Reader r(j, "");
  SimConfig c;
  r.get("scenario", c.scenario);
  r.get("n", c.n);
  if (r.has("dgp")) c.dgp = dgp_from_json(r.at("dgp"));
  r.get("replications", c.replications);
  r.get("seed", c.seed);
  read_method(r, c.method);
  r.get("output", c.output);
  r.reject_unknown();
  return c;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace etk::cli
