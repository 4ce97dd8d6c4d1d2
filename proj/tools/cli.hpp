#pragma once

// Batch front-end shared by the etk executable and the tests.

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "etk/pipeline.hpp"
#include "etk/simulation.hpp"

namespace etk::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitIncompatible = 3,
  kExitSolver = 4,
};

int exit_code_for(const std::exception& e);

// Parameters shared by analysis and simulation runs.
struct MethodConfig {
  std::string estimand;
  std::string method;
  std::string measure = "mean-difference";
  std::optional<double> caliper;
  int ratio = 1;
  int strata = 5;
  std::vector<double> delta;
  std::optional<int> cem_bins;
  std::string distance = "logit";
  std::string pair_solver = "optimal";
  std::optional<std::pair<double, double>> trim_window;
  std::optional<double> trim_percentile;

  Estimand parsed_estimand() const;
  Method parsed_method() const;
  Measure parsed_measure() const;
  // Throws ValidationError naming the bad parameter.
  MethodParams params() const;
};

struct RunConfig {
  std::string data;
  std::string treatment = "T";
  std::string outcome = "Y";
  std::vector<std::string> covariates;
  MethodConfig method;
  std::pair<double, double> window{0.1, 0.9};
  double balance_threshold = 0.1;
  std::size_t bootstrap = 0;
  std::uint64_t seed = 1;
  // "name=value": analyze only the units whose covariate equals value.
  std::optional<std::string> subgroup;
  std::string output;
};

struct SimConfig {
  std::optional<std::string> scenario;
  std::optional<DGPConfig> dgp;
  std::size_t n = 500;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  MethodConfig method;
  std::string output;

  DGPConfig resolved_dgp() const;
};

// Keys mirror the command-line flags (e.g. "trim-window", "pair-solver").
// Unknown keys and wrongly typed values raise ValidationError.
RunConfig run_config_from_json(const Json& j);
SimConfig sim_config_from_json(const Json& j);
DGPConfig dgp_from_json(const Json& j);

// Reads a JSON document; parse failures become ValidationError.
Json load_json_file(const std::string& path);

// design_only selects balance mode: the outcome column is never read and the
// report has no estimate section.
Json analysis_report(const RunConfig& config, bool design_only);
Json simulation_report(const SimConfig& config);
// Embedded truths for the surgery example as "NAME=value" lines.
std::string oracle_text();

std::string dump(const Json& report);

// Run a command, write the report to config.output (or `out`), report errors
// on `err`, return the exit code.
int run_analysis(const RunConfig& config, bool design_only, std::ostream& out, std::ostream& err);
int run_simulation(const SimConfig& config, std::ostream& out, std::ostream& err);
int run_oracle(std::ostream& out);

}  // namespace etk::cli
