#include "etk/surgery.hpp"

#include <optional>

namespace etk::surgery {

std::vector<double> risk_factor() { return {0, 0, 0, 1, 0, 0, 1, 1, 1, 1}; }

std::vector<int> treatments() { return {1, 1, 1, 1, 0, 0, 0, 0, 0, 0}; }

PotentialOutcomeTable potential_outcomes() {
  return PotentialOutcomeTable({80, 80, 60, 30, 50, 30, 70, 60, 50, 50},
                               {60, 70, 10, 30, 40, 40, 70, 50, 80, 60});
}

Dataset observed() {
  const auto x = risk_factor();
  const auto t = treatments();
  const auto y = observed_from_potential(potential_outcomes(), t);
  std::vector<std::vector<double>> rows;
  std::vector<std::optional<double>> outcomes;
  for (std::size_t i = 0; i < x.size(); ++i) {
    rows.push_back({x[i]});
    outcomes.emplace_back(y[i]);
  }
  return Dataset::from_columns({"X"}, rows, t, outcomes);
}

std::string observed_csv() {
  return "X,T,Y\n"
         "0,1,80\n"
         "0,1,80\n"
         "0,1,60\n"
         "1,1,30\n"
         "0,0,40\n"
         "0,0,40\n"
         "1,0,70\n"
         "1,0,50\n"
         "1,0,80\n"
         "1,0,60\n";
}

std::vector<double> stratum_scores() {
  std::vector<double> e;
  for (double x : risk_factor()) e.push_back(x == 0.0 ? 0.6 : 0.2);
  return e;
}

}  // namespace etk::surgery
