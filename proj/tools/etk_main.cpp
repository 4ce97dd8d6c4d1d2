#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli.hpp"

namespace {

using etk::cli::Json;

// Flags that were given on the command line, keyed like the config file.
class Overrides {
 public:
  template <typename T>
  void add(CLI::App* app, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option("--" + key, *value, help);
    setters_.push_back([opt, key, value](Json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
  }

  void add_pair(CLI::App* app, const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::vector<double>>();
    CLI::Option* opt = app->add_option("--" + key, *value, help)->expected(2);
    setters_.push_back([opt, key, value](Json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
  }

  void add_list(CLI::App* app, const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::vector<std::string>>();
    CLI::Option* opt = app->add_option("--" + key, *value, help)->delimiter(',');
    setters_.push_back([opt, key, value](Json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
  }

  void add_numbers(CLI::App* app, const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::vector<double>>();
    CLI::Option* opt = app->add_option("--" + key, *value, help)->delimiter(',');
    setters_.push_back([opt, key, value](Json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
  }

  Json merged(const std::string& config_path) const {
    Json j = config_path.empty() ? Json::object() : etk::cli::load_json_file(config_path);
    if (!j.is_object()) throw etk::ValidationError("config file must hold a JSON object");
    for (const auto& set : setters_) set(j);
    return j;
  }

 private:
  std::vector<std::function<void(Json&)>> setters_;
};

void add_method_flags(CLI::App* app, Overrides& o) {
  o.add<std::string>(app, "estimand", "att, atu, ate or ato");
  o.add<std::string>(app, "method", "method identifier, e.g. smr-weights");
  o.add<std::string>(app, "measure", "mean-difference, risk-ratio or odds-ratio");
  o.add<double>(app, "caliper", "caliper as a multiple of the SD of the logit scores");
  o.add<int>(app, "ratio", "controls per matched unit (pair methods)");
  o.add<int>(app, "strata", "number of strata (fine stratification)");
  o.add_numbers(app, "delta", "SMD tolerance, one value or one per covariate");
  o.add<int>(app, "cem-bins", "bins per continuous covariate (CEM)");
  o.add<std::string>(app, "distance", "logit or euclidean");
  o.add<std::string>(app, "pair-solver", "optimal or greedy");
  o.add_pair(app, "trim-window", "keep units with scores in [lo, hi]");
  o.add<double>(app, "trim-percentile", "cap weights at this percentile");
  o.add<std::uint64_t>(app, "seed", "random seed");
  o.add<std::string>(app, "output", "report path (default: standard output)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimand-targeted causal effect estimation"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides analysis;
  std::vector<CLI::App*> analysis_cmds = {
      app.add_subcommand("analyze", "Run the design and estimate the effect"),
      app.add_subcommand("balance", "Run the design stage only; outcomes are never read")};
  for (CLI::App* cmd : analysis_cmds) {
    cmd->add_option("--config", config_path, "JSON file supplying any flag");
  }
  // Setters fire only for flags that were given, so both commands can feed one set.
  for (CLI::App* cmd : analysis_cmds) {
    Overrides& o = analysis;
    o.add<std::string>(cmd, "data", "comma-separated data file with a header row");
    o.add<std::string>(cmd, "treatment", "treatment column (0/1)");
    o.add<std::string>(cmd, "outcome", "outcome column");
    o.add_list(cmd, "covariates", "comma-separated covariate columns (default: all others)");
    add_method_flags(cmd, o);
    o.add_pair(cmd, "window", "positivity window for the overlap report");
    o.add<double>(cmd, "balance-threshold", "|SMD| bound for a balanced covariate");
    o.add<std::size_t>(cmd, "bootstrap", "bootstrap replicates (0 disables)");
    o.add<std::string>(cmd, "subgroup", "name=value restriction");
  }

  Overrides sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Evaluate a pipeline on simulated data");
  simulate->add_option("--config", config_path, "JSON file supplying any flag");
  sim.add<std::string>(simulate, "scenario",
                       "saturated-binary, overlap-a, overlap-b or tail-frailty");
  sim.add<std::size_t>(simulate, "n", "units per replicate (named scenarios)");
  sim.add<std::size_t>(simulate, "replications", "number of replicates");
  add_method_flags(simulate, sim);

  CLI::App* oracle = app.add_subcommand("oracle", "Print the embedded ten-patient truths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : etk::cli::kExitValidation;
  }

  try {
    if (oracle->parsed()) return etk::cli::run_oracle(std::cout);
    if (simulate->parsed()) {
      const auto config = etk::cli::sim_config_from_json(sim.merged(config_path));
      return etk::cli::run_simulation(config, std::cout, std::cerr);
    }
    const bool design_only = analysis_cmds[1]->parsed();
    const auto config = etk::cli::run_config_from_json(analysis.merged(config_path));
    return etk::cli::run_analysis(config, design_only, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return etk::cli::exit_code_for(e);
  }
}
