#pragma once

// The ten-patient surgery example: binary risk factor X, treatment T and both
// potential outcomes. Row order is the canonical unit order (ids 0..9).

#include <string>
#include <vector>

#include "etk/core.hpp"

namespace etk::surgery {

std::vector<double> risk_factor();
std::vector<int> treatments();
PotentialOutcomeTable potential_outcomes();

// Observed data only: X, T and the revealed outcome.
Dataset observed();

// CSV text with header "X,T,Y" as ingested by the CLI.
std::string observed_csv();

// Propensity scores implied by the table (treated share within each X stratum).
std::vector<double> stratum_scores();

}  // namespace etk::surgery
