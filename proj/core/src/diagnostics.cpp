#include "etk/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "etk/weighting.hpp"

namespace etk {
namespace {

struct GroupMoments {
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // reliability-weighted; equals the n-1 sample variance for unit weights
};

GroupMoments moments(const Dataset& dataset, std::size_t covariate, int group,
                     std::optional<std::span<const double>> weights) {
  if (covariate >= dataset.covariate_count()) {
    throw ValidationError("covariate index " + std::to_string(covariate) + " out of range");
  }
  if (weights && weights->size() != dataset.size()) {
    throw ValidationError("weight vector length does not match the dataset");
  }
  GroupMoments m;
  double sum_wx = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.treatments()[i] != group) continue;
    const double w = weights ? (*weights)[i] : 1.0;
    m.sum_w += w;
    m.sum_w2 += w * w;
    sum_wx += w * dataset.unit(i).covariates[covariate];
  }
  if (!(m.sum_w > 0.0)) {
    throw ValidationError(std::string(group == 1 ? "treated" : "untreated") +
                          " group has no positive weight");
  }
  m.mean = sum_wx / m.sum_w;
  double ss = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.treatments()[i] != group) continue;
    const double w = weights ? (*weights)[i] : 1.0;
    const double d = dataset.unit(i).covariates[covariate] - m.mean;
    ss += w * d * d;
  }
  const double denom = m.sum_w - m.sum_w2 / m.sum_w;
  m.variance = denom > 0.0 ? ss / denom : 0.0;
  return m;
}

ScoreSummary summarize(std::vector<double> values) {
  ScoreSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) s.deciles.push_back(quantile(values, p));
  return s;
}

// Every value of `probe` lies within tol of some value of sorted `ref`.
bool covered(const std::vector<double>& probe, const std::vector<double>& ref, double tol) {
  if (ref.empty()) return false;
  for (double v : probe) {
    const auto it = std::lower_bound(ref.begin(), ref.end(), v);
    double best = std::numeric_limits<double>::infinity();
    if (it != ref.end()) best = *it - v;
    if (it != ref.begin()) best = std::min(best, v - *std::prev(it));
    if (best > tol) return false;
  }
  return true;
}

}  // namespace

double weighted_group_mean(const Dataset& dataset, std::size_t covariate, int group,
                           std::optional<std::span<const double>> weights) {
  return moments(dataset, covariate, group, weights).mean;
}

double smd(const Dataset& dataset, std::size_t covariate,
           std::optional<std::span<const double>> weights) {
  const GroupMoments t = moments(dataset, covariate, 1, weights);
  const GroupMoments c = moments(dataset, covariate, 0, weights);
  const double pooled = std::sqrt((moments(dataset, covariate, 1, std::nullopt).variance +
                                   moments(dataset, covariate, 0, std::nullopt).variance) /
                                  2.0);
  const double diff = t.mean - c.mean;
  if (pooled > 0.0) return diff / pooled;
  const double scale = std::max({1.0, std::fabs(t.mean), std::fabs(c.mean)});
  if (std::fabs(diff) <= 1e-12 * scale) return 0.0;
  throw ValidationError("constant covariate imbalance: covariate '" +
                        dataset.covariate_names()[covariate] +
                        "' is constant within each group but differs between them");
}

double variance_ratio(const Dataset& dataset, std::size_t covariate,
                      std::optional<std::span<const double>> weights) {
  const double vt = moments(dataset, covariate, 1, weights).variance;
  const double vc = moments(dataset, covariate, 0, weights).variance;
  if (vc > 0.0) return vt / vc;
  return vt > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

bool BalanceTable::balanced() const {
  return std::all_of(rows.begin(), rows.end(), [&](const BalanceRow& r) {
    return std::fabs(r.smd_adjusted.value_or(r.smd_unadjusted)) <= threshold;
  });
}

BalanceTable balance_table(const Dataset& dataset, std::optional<std::span<const double>> weights,
                           std::optional<std::span<const double>> scores, double window_lo,
                           double window_hi, double threshold) {
  require_valid(dataset);
  BalanceTable table;
  table.threshold = threshold;
  table.n_treated = dataset.treated_count();
  table.n_untreated = dataset.untreated_count();
  for (std::size_t j = 0; j < dataset.covariate_count(); ++j) {
    BalanceRow row;
    row.covariate = dataset.covariate_names()[j];
    row.smd_unadjusted = smd(dataset, j);
    row.variance_ratio_unadjusted = variance_ratio(dataset, j);
    if (weights) {
      row.smd_adjusted = smd(dataset, j, weights);
      row.variance_ratio_adjusted = variance_ratio(dataset, j, weights);
    }
    table.rows.push_back(std::move(row));
  }
  if (weights) {
    table.ess_treated = ess(*weights, dataset.treatments(), Group::Treated);
    table.ess_untreated = ess(*weights, dataset.treatments(), Group::Untreated);
  }
  if (scores) {
    for (std::size_t i = 0; i < scores->size(); ++i) {
      if ((*scores)[i] < window_lo || (*scores)[i] > window_hi) table.positivity_flags.push_back(i);
    }
  }
  return table;
}

OverlapReport overlap_report(std::span<const double> scores, std::span<const int> treatments,
                             double window_lo, double window_hi, double tolerance) {
  if (scores.size() != treatments.size()) {
    throw ValidationError("score and treatment vectors differ in length");
  }
  std::vector<double> st, sc;
  OverlapReport rep;
  rep.window_lo = window_lo;
  rep.window_hi = window_hi;
  rep.tolerance = tolerance;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool outside = scores[i] < window_lo || scores[i] > window_hi;
    if (treatments[i] == 1) {
      st.push_back(scores[i]);
      rep.outside_treated += outside;
    } else {
      sc.push_back(scores[i]);
      rep.outside_untreated += outside;
    }
  }
  std::sort(st.begin(), st.end());
  std::sort(sc.begin(), sc.end());
  rep.treated = summarize(st);
  rep.untreated = summarize(sc);

  const bool att = !st.empty() && covered(st, sc, tolerance);
  const bool atu = !sc.empty() && covered(sc, st, tolerance);
  bool ate = att && atu;
  if (ate) {
    const double lo = std::min(st.front(), sc.front());
    const double hi = std::max(st.back(), sc.back());
    ate = st.front() <= lo + tolerance && sc.front() <= lo + tolerance &&
          st.back() >= hi - tolerance && sc.back() >= hi - tolerance;
  }
  bool ato = false;
  if (!st.empty() && !sc.empty()) {
    std::size_t a = 0, b = 0;
    while (a < st.size() && b < sc.size() && !ato) {
      ato = std::fabs(st[a] - sc[b]) <= tolerance;
      (st[a] < sc[b] ? a : b)++;
    }
  }
  rep.feasible = {{Estimand::ATT, att}, {Estimand::ATU, atu}, {Estimand::ATE, ate},
                  {Estimand::ATO, ato}};
  return rep;
}

}  // namespace etk
