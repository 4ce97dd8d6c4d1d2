#include "etk/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace etk {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> treatments) {
  if (scores.size() != treatments.size()) {
    throw ValidationError("score and treatment vectors differ in length");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] > 0.0 && scores[i] < 1.0)) {
      throw ValidationError("propensity score of unit " + std::to_string(i) +
                            " is outside (0,1)");
    }
    if (treatments[i] != 0 && treatments[i] != 1) {
      throw ValidationError("treatment of unit " + std::to_string(i) + " is not 0/1");
    }
  }
}

template <typename F>
WeightVector build(std::span<const double> scores, std::span<const int> treatments,
                   Estimand target, std::string provenance, F weight_of) {
  check_inputs(scores, treatments);
  std::vector<double> w(scores.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = weight_of(scores[i], treatments[i] == 1);
  return WeightVector(std::move(w), target, std::move(provenance));
}

bool group_has_weight(const std::vector<double>& w, std::span<const int> t, int group) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (t[i] == group && w[i] > 0.0) return true;
  }
  return false;
}

}  // namespace

WeightVector ipw_ate(std::span<const double> scores, std::span<const int> treatments) {
  return build(scores, treatments, Estimand::ATE, "ipw-weights",
               [](double e, bool treated) { return treated ? 1.0 / e : 1.0 / (1.0 - e); });
}

WeightVector smr(std::span<const double> scores, std::span<const int> treatments,
                 Estimand target) {
  if (target == Estimand::ATT) {
    return build(scores, treatments, target, "smr-weights",
                 [](double e, bool treated) { return treated ? 1.0 : e / (1.0 - e); });
  }
  if (target == Estimand::ATU) {
    return build(scores, treatments, target, "smr-weights",
                 [](double e, bool treated) { return treated ? (1.0 - e) / e : 1.0; });
  }
  throw IncompatibleError("SMR weights target the ATT or ATU, not the " +
                          std::string(to_string(target)));
}

WeightVector overlap_ato(std::span<const double> scores, std::span<const int> treatments) {
  return build(scores, treatments, Estimand::ATO, "overlap-weights",
               [](double e, bool treated) { return treated ? 1.0 - e : e; });
}

WeightVector matching_weights(std::span<const double> scores, std::span<const int> treatments) {
  return build(scores, treatments, Estimand::ATO, "matching-weights",
               [](double e, bool treated) {
                 const double m = std::min(e, 1.0 - e);
                 return treated ? m / e : m / (1.0 - e);
               });
}

TrimSpec TrimSpec::window(double lo, double hi) {
  TrimSpec s;
  s.mode = Mode::ScoreWindow;
  s.lo = lo;
  s.hi = hi;
  s.validate();
  return s;
}

TrimSpec TrimSpec::cap(double percentile) {
  TrimSpec s;
  s.mode = Mode::WeightPercentile;
  s.percentile = percentile;
  s.validate();
  return s;
}

void TrimSpec::validate() const {
  if (mode == Mode::ScoreWindow) {
    if (!(lo > 0.0 && hi < 1.0 && lo < hi)) {
      throw ValidationError("trim window must satisfy 0 < lo < hi < 1");
    }
  } else if (!(percentile > 0.0 && percentile <= 1.0)) {
    throw ValidationError("trim percentile must lie in (0, 1]");
  }
}

WeightVector trim(const WeightVector& weights, std::span<const double> scores,
                  std::span<const int> treatments, const TrimSpec& spec) {
  spec.validate();
  if (weights.size() != treatments.size()) {
    throw ValidationError("weight and treatment vectors differ in length");
  }
  std::vector<double> w = weights.weights;
  std::size_t changed = 0;
  std::ostringstream note;
  if (spec.mode == TrimSpec::Mode::ScoreWindow) {
    if (scores.size() != w.size()) throw ValidationError("score-window trimming needs scores");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if ((scores[i] < spec.lo || scores[i] > spec.hi) && w[i] > 0.0) {
        w[i] = 0.0;
        ++changed;
      }
    }
    note << "trimmed to scores in [" << spec.lo << ", " << spec.hi << "]";
  } else {
    std::vector<double> positive;
    for (double v : w) {
      if (v > 0.0) positive.push_back(v);
    }
    if (positive.empty()) throw ValidationError("no positive weights to cap");
    const double cap = quantile(positive, spec.percentile);
    for (double& v : w) {
      if (v > cap) {
        v = cap;
        ++changed;
      }
    }
    note << "weights capped at percentile " << spec.percentile;
  }
  for (int group : {1, 0}) {
    if (!group_has_weight(w, treatments, group)) {
      throw ValidationError(std::string("trimming removed every ") +
                            (group == 1 ? "treated" : "untreated") + " unit");
    }
  }
  WeightVector out(std::move(w), Estimand::ATO,
                   weights.provenance + " + weight-trimming (" + note.str() + ")");
  out.warnings = weights.warnings;
  out.warnings.push_back(note.str() + " (" + std::to_string(changed) +
                         " units affected); trimming changes the estimand from " +
                         std::string(to_string(weights.target)) + " to ATO");
  return out;
}

double ess(std::span<const double> weights, std::span<const int> treatments, Group group) {
  if (weights.size() != treatments.size()) {
    throw ValidationError("weight and treatment vectors differ in length");
  }
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const bool in_group = group == Group::All || (group == Group::Treated) == (treatments[i] == 1);
    if (!in_group) continue;
    sum += weights[i];
    sum_sq += weights[i] * weights[i];
  }
  if (!(sum_sq > 0.0)) throw ValidationError("effective sample size of an all-zero group");
  return sum * sum / sum_sq;
}

}  // namespace etk
