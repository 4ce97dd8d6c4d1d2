#include "etk/matching.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "etk/flow.hpp"
#include "etk/propensity.hpp"

namespace etk {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pairwise distance oracle over units of one dataset.
class DistanceModel {
 public:
  DistanceModel(const Dataset& dataset, std::span<const double> scores, const MatchSpec& spec)
      : kind_(spec.distance) {
    if (kind_ == Distance::LogitScore) {
      if (scores.size() != dataset.size()) {
        throw ValidationError("score vector length does not match the dataset");
      }
      logits_ = logit(scores);
      if (spec.caliper) width_ = *spec.caliper * std::sqrt(sample_variance(logits_));
    } else {
      for (std::size_t j = 0; j < dataset.covariate_count(); ++j) {
        auto column = dataset.covariate(j);
        const double sd = std::sqrt(sample_variance(column));
        if (sd == 0.0) continue;
        const double m = mean(column);
        for (double& v : column) v = (v - m) / sd;
        standardized_.push_back(std::move(column));
      }
      if (spec.caliper) width_ = *spec.caliper;
    }
  }

  double operator()(std::size_t i, std::size_t j) const {
    if (kind_ == Distance::LogitScore) return std::fabs(logits_[i] - logits_[j]);
    double ss = 0.0;
    for (const auto& col : standardized_) ss += (col[i] - col[j]) * (col[i] - col[j]);
    return std::sqrt(ss);
  }

  bool allowed(std::size_t i, std::size_t j) const {
    return !width_ || (*this)(i, j) <= *width_;
  }

 private:
  Distance kind_;
  std::vector<double> logits_;
  std::vector<std::vector<double>> standardized_;
  std::optional<double> width_;
};

struct Roles {
  std::vector<std::size_t> focal;
  std::vector<std::size_t> reservoir;
};

Roles split_roles(const Dataset& dataset, Group focal) {
  const int focal_value = focal == Group::Untreated ? 0 : 1;
  Roles roles;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset.treatments()[i] == focal_value ? roles.focal : roles.reservoir).push_back(i);
  }
  return roles;
}

void check_pair_preconditions(const Dataset& dataset, std::span<const double> scores,
                              const MatchSpec& spec, const Roles& roles) {
  require_valid(dataset);
  spec.validate();
  if (spec.focal == Group::All) throw ValidationError("pair matching needs a focal group");
  // Covariate distances need no scores; logit distances check them in DistanceModel.
  if (!scores.empty() && scores.size() != dataset.size()) {
    throw ValidationError("score vector length does not match the dataset");
  }
  const auto need = static_cast<std::size_t>(spec.ratio) * roles.focal.size();
  if (roles.reservoir.size() < need) {
    throw ValidationError(
        "pair matching without replacement needs at least " + std::to_string(need) +
        " units in the matched-to group (" + std::to_string(spec.ratio) + " per focal unit) but " +
        std::to_string(roles.reservoir.size()) + " are available");
  }
}

void sort_strata(std::vector<std::vector<std::size_t>>& strata) {
  for (auto& s : strata) std::sort(s.begin(), s.end());
  std::sort(strata.begin(), strata.end());
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::vector<std::size_t>>& strata) {
  std::vector<bool> used(n, false);
  for (const auto& s : strata) {
    for (std::size_t id : s) used[id] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!used[i]) out.push_back(i);
  }
  return out;
}

// Assembles pair strata from focal -> matched units and fills bookkeeping.
MatchStructure pair_structure(const Dataset& dataset, const DistanceModel& dist,
                              const std::map<std::size_t, std::vector<std::size_t>>& matches,
                              Group focal, std::string method) {
  MatchStructure ms;
  ms.kind = MatchKind::Pair;
  ms.focal = focal;
  ms.method = std::move(method);
  for (const auto& [f, partners] : matches) {
    if (partners.empty()) continue;
    std::vector<std::size_t> stratum{f};
    for (std::size_t c : partners) {
      stratum.push_back(c);
      ms.total_distance += dist(f, c);
    }
    ms.strata.push_back(std::move(stratum));
  }
  if (ms.strata.empty()) {
    throw ValidationError("every focal unit was discarded; no match lies inside the caliper");
  }
  sort_strata(ms.strata);
  ms.discarded = complement(dataset.size(), ms.strata);
  return ms;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

MatchStructure strata_from_groups(const Dataset& dataset,
                                  std::vector<std::vector<std::size_t>> groups, MatchKind kind,
                                  std::string method, const char* empty_message) {
  MatchStructure ms;
  ms.kind = kind;
  ms.focal = Group::All;
  ms.method = std::move(method);
  const auto& t = dataset.treatments();
  for (auto& g : groups) {
    const bool has_t = std::any_of(g.begin(), g.end(), [&](std::size_t i) { return t[i] == 1; });
    const bool has_c = std::any_of(g.begin(), g.end(), [&](std::size_t i) { return t[i] == 0; });
    if (has_t && has_c) {
      ms.strata.push_back(std::move(g));
    } else {
      ms.discarded.insert(ms.discarded.end(), g.begin(), g.end());
    }
  }
  if (ms.strata.empty()) throw ValidationError(empty_message);
  sort_strata(ms.strata);
  std::sort(ms.discarded.begin(), ms.discarded.end());
  return ms;
}

// ---- cardinality matching --------------------------------------------------

struct BalanceProblem {
  std::size_t covariates = 0;
  std::vector<std::vector<double>> x;  // x[unit][covariate]
  std::vector<double> bound;           // delta_j * s_j, +inf when unconstrained
  std::vector<bool> active;            // covariate has nonzero pooled SD and finite delta

  bool feasible(const std::vector<std::size_t>& treated,
                const std::vector<std::size_t>& control) const {
    if (treated.empty() || control.empty()) return false;
    for (std::size_t j = 0; j < covariates; ++j) {
      if (!active[j]) continue;
      double st = 0.0, sc = 0.0;
      for (std::size_t i : treated) st += x[i][j];
      for (std::size_t i : control) sc += x[i][j];
      const double diff = st / static_cast<double>(treated.size()) -
                          sc / static_cast<double>(control.size());
      if (std::fabs(diff) > bound[j]) return false;
    }
    return true;
  }

  // Worst |mean difference| / bound over active covariates.
  double worst(const std::vector<double>& sum_t, double n_t, const std::vector<double>& sum_c,
               double n_c) const {
    double w = 0.0;
    for (std::size_t j = 0; j < covariates; ++j) {
      if (!active[j]) continue;
      w = std::max(w, std::fabs(sum_t[j] / n_t - sum_c[j] / n_c) / bound[j]);
    }
    return w;
  }
};

BalanceProblem make_balance_problem(const Dataset& dataset, const MatchSpec& spec) {
  BalanceProblem prob;
  prob.covariates = dataset.covariate_count();
  const auto& tol = spec.balance_tolerance;
  if (tol.size() != 1 && tol.size() != prob.covariates) {
    throw ValidationError("balance tolerance needs one entry or one per covariate (" +
                          std::to_string(prob.covariates) + ")");
  }
  for (const Unit& u : dataset.units()) prob.x.push_back(u.covariates);
  for (std::size_t j = 0; j < prob.covariates; ++j) {
    const double delta = tol.size() == 1 ? tol[0] : tol[j];
    std::vector<double> xt, xc;
    for (const Unit& u : dataset.units()) (u.treatment == 1 ? xt : xc).push_back(u.covariates[j]);
    const double s = std::sqrt((sample_variance(xt) + sample_variance(xc)) / 2.0);
    const bool active = std::isfinite(delta) && s > 0.0;
    prob.active.push_back(active);
    prob.bound.push_back(active ? delta * s : kInf);
  }
  return prob;
}

// Sorted suffix sums: for position pos in a unit list and covariate j, the
// smallest and largest achievable sums of r further picks.
class SuffixBounds {
 public:
  SuffixBounds(const BalanceProblem& prob, const std::vector<std::size_t>& ids)
      : prefix_(ids.size() + 1) {
    for (std::size_t pos = 0; pos <= ids.size(); ++pos) {
      prefix_[pos].resize(prob.covariates);
      for (std::size_t j = 0; j < prob.covariates; ++j) {
        std::vector<double> vals;
        for (std::size_t k = pos; k < ids.size(); ++k) vals.push_back(prob.x[ids[k]][j]);
        std::sort(vals.begin(), vals.end());
        auto& p = prefix_[pos][j];
        p.assign(vals.size() + 1, 0.0);
        for (std::size_t k = 0; k < vals.size(); ++k) p[k + 1] = p[k] + vals[k];
      }
    }
  }
  double min_sum(std::size_t pos, std::size_t j, std::size_t r) const { return prefix_[pos][j][r]; }
  double max_sum(std::size_t pos, std::size_t j, std::size_t r) const {
    const auto& p = prefix_[pos][j];
    return p.back() - p[p.size() - 1 - r];
  }

 private:
  std::vector<std::vector<std::vector<double>>> prefix_;
};

class CardinalitySearch {
 public:
  CardinalitySearch(const BalanceProblem& prob, std::vector<std::size_t> treated,
                    std::vector<std::size_t> control)
      : prob_(prob),
        treated_(std::move(treated)),
        control_(std::move(control)),
        bounds_t_(prob, treated_),
        bounds_c_(prob, control_) {}

  // Largest feasible (treated, control) subset; ties prefer more treated,
  // then the include-lowest-ids-first subset.
  std::optional<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> solve() {
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    for (std::size_t kt = 1; kt <= treated_.size(); ++kt) {
      for (std::size_t kc = 1; kc <= control_.size(); ++kc) sizes.emplace_back(kt, kc);
    }
    std::sort(sizes.begin(), sizes.end(), [](const auto& a, const auto& b) {
      if (a.first + a.second != b.first + b.second) return a.first + a.second > b.first + b.second;
      return a.first > b.first;
    });
    for (const auto& [kt, kc] : sizes) {
      kt_ = kt;
      kc_ = kc;
      pick_t_.clear();
      pick_c_.clear();
      sum_t_.assign(prob_.covariates, 0.0);
      sum_c_.assign(prob_.covariates, 0.0);
      if (search_treated(0)) return std::make_pair(pick_t_, pick_c_);
    }
    return std::nullopt;
  }

 private:
  bool promising(std::size_t pos_t, std::size_t pos_c) const {
    const std::size_t rt = kt_ - pick_t_.size();
    const std::size_t rc = kc_ - pick_c_.size();
    const double nt = static_cast<double>(kt_), nc = static_cast<double>(kc_);
    for (std::size_t j = 0; j < prob_.covariates; ++j) {
      if (!prob_.active[j]) continue;
      const double t_lo = (sum_t_[j] + bounds_t_.min_sum(pos_t, j, rt)) / nt;
      const double t_hi = (sum_t_[j] + bounds_t_.max_sum(pos_t, j, rt)) / nt;
      const double c_lo = (sum_c_[j] + bounds_c_.min_sum(pos_c, j, rc)) / nc;
      const double c_hi = (sum_c_[j] + bounds_c_.max_sum(pos_c, j, rc)) / nc;
      // Slack keeps rounding in the bound sums from pruning a feasible branch.
      const double b = prob_.bound[j] * (1.0 + 1e-12) + 1e-12;
      if (t_lo - c_hi > b || t_hi - c_lo < -b) return false;
    }
    return true;
  }

  bool search_treated(std::size_t pos) {
    if (pick_t_.size() == kt_) return search_control(0);
    if (treated_.size() - pos < kt_ - pick_t_.size()) return false;
    if (!promising(pos, 0)) return false;
    const std::size_t id = treated_[pos];
    pick_t_.push_back(id);
    for (std::size_t j = 0; j < prob_.covariates; ++j) sum_t_[j] += prob_.x[id][j];
    if (search_treated(pos + 1)) return true;
    for (std::size_t j = 0; j < prob_.covariates; ++j) sum_t_[j] -= prob_.x[id][j];
    pick_t_.pop_back();
    return search_treated(pos + 1);
  }

  bool search_control(std::size_t pos) {
    if (pick_c_.size() == kc_) return prob_.feasible(pick_t_, pick_c_);
    if (control_.size() - pos < kc_ - pick_c_.size()) return false;
    if (!promising(treated_.size(), pos)) return false;
    const std::size_t id = control_[pos];
    pick_c_.push_back(id);
    for (std::size_t j = 0; j < prob_.covariates; ++j) sum_c_[j] += prob_.x[id][j];
    if (search_control(pos + 1)) return true;
    for (std::size_t j = 0; j < prob_.covariates; ++j) sum_c_[j] -= prob_.x[id][j];
    pick_c_.pop_back();
    return search_control(pos + 1);
  }

  const BalanceProblem& prob_;
  std::vector<std::size_t> treated_, control_;
  SuffixBounds bounds_t_, bounds_c_;
  std::size_t kt_ = 0, kc_ = 0;
  std::vector<std::size_t> pick_t_, pick_c_;
  std::vector<double> sum_t_, sum_c_;
};

// Greedy removal followed by add/swap local search.
std::vector<bool> cardinality_heuristic(const BalanceProblem& prob, const std::vector<int>& t) {
  const std::size_t n = t.size();
  std::vector<bool> in(n, true);
  std::vector<double> sum[2] = {std::vector<double>(prob.covariates, 0.0),
                                std::vector<double>(prob.covariates, 0.0)};
  double count[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    count[t[i]] += 1.0;
    for (std::size_t j = 0; j < prob.covariates; ++j) sum[t[i]][j] += prob.x[i][j];
  }
  auto shift = [&](std::size_t i, double sign) {
    count[t[i]] += sign;
    for (std::size_t j = 0; j < prob.covariates; ++j) sum[t[i]][j] += sign * prob.x[i][j];
  };
  auto worst = [&] { return prob.worst(sum[1], count[1], sum[0], count[0]); };
  auto worst_if = [&](std::size_t i, double sign) {
    shift(i, sign);
    const double w = (count[0] > 0 && count[1] > 0) ? worst() : kInf;
    shift(i, -sign);
    return w;
  };

  while (worst() > 1.0) {
    std::size_t best = n;
    double best_w = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in[i] || count[t[i]] <= 1.0) continue;
      const double w = worst_if(i, -1.0);
      if (w < best_w) {
        best_w = w;
        best = i;
      }
    }
    if (best == n) break;
    in[best] = false;
    shift(best, -1.0);
  }
  if (worst() > 1.0) return {};

  const std::size_t max_rounds = 10 * n + 100;
  for (std::size_t round = 0; round < max_rounds; ++round) {
    bool added = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (in[i] || worst_if(i, 1.0) > 1.0) continue;
      in[i] = true;
      shift(i, 1.0);
      added = true;
    }
    if (added) continue;
    const double current = worst();
    double best_w = current;
    std::pair<std::size_t, std::size_t> best_swap{n, n};
    for (std::size_t out = 0; out < n; ++out) {
      if (!in[out]) continue;
      shift(out, -1.0);
      for (std::size_t add = 0; add < n; ++add) {
        if (in[add] || t[add] != t[out]) continue;
        const double w = worst_if(add, 1.0);
        if (w < best_w) {
          best_w = w;
          best_swap = {out, add};
        }
      }
      shift(out, 1.0);
    }
    if (best_swap.first == n) break;
    in[best_swap.first] = false;
    shift(best_swap.first, -1.0);
    in[best_swap.second] = true;
    shift(best_swap.second, 1.0);
  }
  return in;
}

}  // namespace

void MatchSpec::validate() const {
  if (caliper && !(*caliper > 0.0 && std::isfinite(*caliper))) {
    throw ValidationError("caliper must be a positive finite number");
  }
  if (ratio < 1) throw ValidationError("matching ratio must be at least 1");
  if (strata_count < 1) throw ValidationError("strata count must be at least 1");
  if (cem_bins && *cem_bins < 1) throw ValidationError("CEM bin count must be at least 1");
  for (double d : balance_tolerance) {
    if (!(d > 0.0)) throw ValidationError("balance tolerance must be positive");
  }
}

MatchStructure greedy_nn(const Dataset& dataset, std::span<const double> scores,
                         const MatchSpec& spec) {
  Roles roles = split_roles(dataset, spec.focal);
  check_pair_preconditions(dataset, scores, spec, roles);
  const DistanceModel dist(dataset, scores, spec);

  // Hardest to match first: highest scores when matching treated units,
  // lowest when matching untreated units.
  // Without scores (covariate distance) the focal units keep id order.
  const bool descending = spec.focal == Group::Treated;
  if (!scores.empty()) {
    std::stable_sort(roles.focal.begin(), roles.focal.end(), [&](std::size_t a, std::size_t b) {
      return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    });
  }

  std::vector<bool> used(dataset.size(), false);
  std::map<std::size_t, std::vector<std::size_t>> matches;
  for (std::size_t f : roles.focal) {
    auto& partners = matches[f];
    for (int r = 0; r < spec.ratio; ++r) {
      std::size_t best = dataset.size();
      double best_d = kInf;
      for (std::size_t c : roles.reservoir) {
        if (used[c] || !dist.allowed(f, c)) continue;
        const double d = dist(f, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (best == dataset.size()) break;
      used[best] = true;
      partners.push_back(best);
    }
  }
  return pair_structure(dataset, dist, matches, spec.focal, "greedy-nearest-neighbor");
}

MatchStructure optimal_pair(const Dataset& dataset, std::span<const double> scores,
                            const MatchSpec& spec) {
  const Roles roles = split_roles(dataset, spec.focal);
  check_pair_preconditions(dataset, scores, spec, roles);
  const DistanceModel dist(dataset, scores, spec);

  const std::size_t nf = roles.focal.size(), nr = roles.reservoir.size();
  const std::size_t source = 0, sink = 1;
  MinCostFlow flow(2 + nf + nr);
  for (std::size_t a = 0; a < nf; ++a) flow.add_edge(source, 2 + a, spec.ratio, 0.0);
  for (std::size_t b = 0; b < nr; ++b) flow.add_edge(2 + nf + b, sink, 1, 0.0);
  struct PairEdge {
    std::size_t handle, focal, partner;
  };
  std::vector<PairEdge> edges;
  for (std::size_t a = 0; a < nf; ++a) {
    for (std::size_t b = 0; b < nr; ++b) {
      const std::size_t f = roles.focal[a], c = roles.reservoir[b];
      if (!dist.allowed(f, c)) continue;
      edges.push_back({flow.add_edge(2 + a, 2 + nf + b, 1, dist(f, c)), f, c});
    }
  }
  flow.solve(source, sink);

  std::map<std::size_t, std::vector<std::size_t>> matches;
  for (const PairEdge& e : edges) {
    if (flow.flow(e.handle) > 0) matches[e.focal].push_back(e.partner);
  }
  return pair_structure(dataset, dist, matches, spec.focal, "optimal-pair");
}

MatchStructure full_matching(const Dataset& dataset, std::span<const double> scores,
                             const MatchSpec& spec) {
  require_valid(dataset);
  spec.validate();
  const DistanceModel dist(dataset, scores, spec);
  const auto& t = dataset.treatments();

  std::vector<std::size_t> treated, control;
  for (std::size_t i = 0; i < dataset.size(); ++i) (t[i] == 1 ? treated : control).push_back(i);

  // Units without any admissible partner cannot join a stratum.
  auto has_partner = [&](std::size_t i, const std::vector<std::size_t>& others) {
    return std::any_of(others.begin(), others.end(),
                       [&](std::size_t j) { return dist.allowed(i, j); });
  };
  std::vector<std::size_t> kept_t, kept_c;
  for (std::size_t i : treated) {
    if (has_partner(i, control)) kept_t.push_back(i);
  }
  for (std::size_t i : control) {
    if (has_partner(i, treated)) kept_c.push_back(i);
  }
  if (kept_t.empty() || kept_c.empty()) {
    throw ValidationError("full matching is infeasible under the caliper: no treated/untreated "
                          "pair lies within it");
  }

  // Circulation with lower bound 1 on every unit, rewritten as a plain flow:
  // node supplies come from the super source, demands drain to the super sink.
  const std::size_t nt = kept_t.size(), nc = kept_c.size();
  const std::size_t super_source = 0, super_sink = 1, hub_in = 2, hub_out = 3, first = 4;
  MinCostFlow flow(first + nt + nc);
  const auto n_t = static_cast<std::int64_t>(nt), n_c = static_cast<std::int64_t>(nc);
  flow.add_edge(super_source, hub_out, n_c, 0.0);
  flow.add_edge(hub_in, super_sink, n_t, 0.0);
  flow.add_edge(hub_out, hub_in, MinCostFlow::kInfinite, 0.0);
  for (std::size_t a = 0; a < nt; ++a) {
    flow.add_edge(super_source, first + a, 1, 0.0);
    flow.add_edge(hub_in, first + a, MinCostFlow::kInfinite, 0.0);
  }
  for (std::size_t b = 0; b < nc; ++b) {
    flow.add_edge(first + nt + b, super_sink, 1, 0.0);
    flow.add_edge(first + nt + b, hub_out, MinCostFlow::kInfinite, 0.0);
  }
  struct CoverEdge {
    std::size_t handle, a, b;
    double cost;
  };
  std::vector<CoverEdge> edges;
  for (std::size_t a = 0; a < nt; ++a) {
    for (std::size_t b = 0; b < nc; ++b) {
      if (!dist.allowed(kept_t[a], kept_c[b])) continue;
      const double d = dist(kept_t[a], kept_c[b]);
      edges.push_back({flow.add_edge(first + a, first + nt + b, MinCostFlow::kInfinite, d), a, b, d});
    }
  }
  const auto result = flow.solve(super_source, super_sink);
  if (result.flow != n_t + n_c) {
    throw SolverError("full matching flow did not cover every unit");
  }

  std::vector<CoverEdge> cover;
  std::vector<std::size_t> deg_t(nt, 0), deg_c(nc, 0);
  for (const CoverEdge& e : edges) {
    if (flow.flow(e.handle) <= 0) continue;
    cover.push_back(e);
    ++deg_t[e.a];
    ++deg_c[e.b];
  }
  // Drop redundant edges (both ends covered elsewhere) so strata are stars.
  std::stable_sort(cover.begin(), cover.end(),
                   [](const CoverEdge& x, const CoverEdge& y) { return x.cost > y.cost; });
  std::vector<CoverEdge> kept_edges;
  for (const CoverEdge& e : cover) {
    if (deg_t[e.a] > 1 && deg_c[e.b] > 1) {
      --deg_t[e.a];
      --deg_c[e.b];
    } else {
      kept_edges.push_back(e);
    }
  }

  UnionFind uf(nt + nc);
  MatchStructure ms;
  ms.kind = MatchKind::Full;
  ms.focal = Group::All;
  ms.method = "full-matching";
  for (const CoverEdge& e : kept_edges) {
    uf.unite(e.a, nt + e.b);
    ms.total_distance += e.cost;
  }
  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t a = 0; a < nt; ++a) components[uf.find(a)].push_back(kept_t[a]);
  for (std::size_t b = 0; b < nc; ++b) components[uf.find(nt + b)].push_back(kept_c[b]);
  for (auto& [root, members] : components) ms.strata.push_back(std::move(members));

  // Among equally cheap solutions prefer coarser strata: two strata merge when
  // every treated/untreated pair across them is at distance zero, which
  // leaves the objective unchanged.
  auto zero_cross = [&](const std::vector<std::size_t>& x, const std::vector<std::size_t>& y) {
    for (std::size_t i : x) {
      for (std::size_t j : y) {
        if (t[i] != t[j] && dist(i, j) != 0.0) return false;
      }
    }
    return true;
  };
  for (bool merged = true; merged;) {
    merged = false;
    for (std::size_t a = 0; a < ms.strata.size() && !merged; ++a) {
      for (std::size_t b = a + 1; b < ms.strata.size() && !merged; ++b) {
        if (!zero_cross(ms.strata[a], ms.strata[b])) continue;
        ms.strata[a].insert(ms.strata[a].end(), ms.strata[b].begin(), ms.strata[b].end());
        ms.strata.erase(ms.strata.begin() + static_cast<std::ptrdiff_t>(b));
        merged = true;
      }
    }
  }
  sort_strata(ms.strata);
  ms.discarded = complement(dataset.size(), ms.strata);
  return ms;
}

MatchStructure fine_stratification(const Dataset& dataset, std::span<const double> scores,
                                   const MatchSpec& spec) {
  require_valid(dataset);
  spec.validate();
  if (scores.size() != dataset.size()) {
    throw ValidationError("score vector length does not match the dataset");
  }
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const auto k = static_cast<std::size_t>(spec.strata_count);
  if (k > distinct.size()) {
    throw ValidationError("fine stratification asked for " + std::to_string(k) +
                          " strata but the scores take only " + std::to_string(distinct.size()) +
                          " distinct values");
  }

  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Rank-quantile bins; tied scores always share a bin.
  std::vector<std::vector<std::size_t>> bins(k);
  std::size_t bin = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r == 0 || scores[order[r]] != scores[order[r - 1]]) bin = (k * r) / n;
    bins[bin].push_back(order[r]);
  }
  std::vector<std::vector<std::size_t>> groups;
  for (auto& b : bins) {
    if (!b.empty()) groups.push_back(std::move(b));
  }
  return strata_from_groups(dataset, std::move(groups), MatchKind::FineStrata,
                            "fine-stratification",
                            "fine stratification failed: every stratum lacks one treatment group");
}

MatchStructure cem(const Dataset& dataset, const MatchSpec& spec) {
  require_valid(dataset);
  spec.validate();
  const std::size_t p = dataset.covariate_count();
  if (p == 0) throw ValidationError("coarsened exact matching needs at least one covariate");
  const std::size_t n = dataset.size();
  const int sturges =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(n)) + 1.0));
  const int bins = spec.cem_bins.value_or(sturges);

  std::vector<std::vector<long>> signature(n, std::vector<long>(p));
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = dataset.covariate(j);
    const bool binary =
        std::all_of(col.begin(), col.end(), [](double v) { return v == 0.0 || v == 1.0; });
    const auto [lo_it, hi_it] = std::minmax_element(col.begin(), col.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = (hi - lo) / bins;
    for (std::size_t i = 0; i < n; ++i) {
      long code = 0;
      if (binary) {
        code = static_cast<long>(col[i]);
      } else if (width > 0.0) {
        code = std::min<long>(static_cast<long>(std::floor((col[i] - lo) / width)), bins - 1);
      }
      signature[i][j] = code;
    }
  }
  std::map<std::vector<long>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < n; ++i) cells[signature[i]].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [sig, ids] : cells) groups.push_back(std::move(ids));
  return strata_from_groups(dataset, std::move(groups), MatchKind::Exact, "cem",
                            "coarsened exact matching left no stratum with both groups");
}

MatchStructure cardinality_matching(const Dataset& dataset, const MatchSpec& spec) {
  require_valid(dataset);
  spec.validate();
  if (spec.balance_tolerance.empty()) {
    throw ValidationError("cardinality matching needs a balance tolerance per covariate");
  }
  const BalanceProblem prob = make_balance_problem(dataset, spec);
  const auto& t = dataset.treatments();
  std::vector<std::size_t> treated, control;
  for (std::size_t i = 0; i < dataset.size(); ++i) (t[i] == 1 ? treated : control).push_back(i);

  std::vector<std::size_t> selected;
  bool exact = treated.size() <= kCardinalityExactLimit && control.size() <= kCardinalityExactLimit;
  if (exact) {
    CardinalitySearch search(prob, treated, control);
    const auto found = search.solve();
    if (!found) throw ValidationError("cardinality matching found no balanced subset");
    selected = found->first;
    selected.insert(selected.end(), found->second.begin(), found->second.end());
  } else {
    const auto in = cardinality_heuristic(prob, t);
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i]) selected.push_back(i);
    }
    if (selected.empty()) throw ValidationError("cardinality matching found no balanced subset");
  }
  std::sort(selected.begin(), selected.end());

  MatchStructure ms;
  ms.kind = MatchKind::Cardinality;
  ms.focal = Group::All;
  ms.method = exact ? "cardinality-matching (exact)" : "cardinality-matching (local search)";
  ms.strata.push_back(selected);
  ms.discarded = complement(dataset.size(), ms.strata);
  return ms;
}

double structure_distance(const Dataset& dataset, std::span<const double> scores,
                          const MatchStructure& ms, Distance distance) {
  MatchSpec spec;
  spec.distance = distance;
  const DistanceModel dist(dataset, scores, spec);
  const auto& t = dataset.treatments();
  double total = 0.0;
  for (const auto& stratum : ms.strata) {
    if (ms.kind == MatchKind::Pair) {
      const int focal_value = ms.focal == Group::Untreated ? 0 : 1;
      const auto f = std::find_if(stratum.begin(), stratum.end(),
                                  [&](std::size_t i) { return t[i] == focal_value; });
      for (std::size_t i : stratum) {
        if (t[i] != focal_value) total += dist(*f, i);
      }
    } else {
      for (std::size_t i : stratum) {
        for (std::size_t j : stratum) {
          if (t[i] == 1 && t[j] == 0) total += dist(i, j);
        }
      }
    }
  }
  return total;
}

WeightVector match_to_weights(const MatchStructure& ms, Estimand target,
                              std::span<const int> treatments) {
  const auto problems = ms.check(treatments);
  if (!problems.empty()) throw ValidationError("invalid match structure: " + problems.front());
  if (ms.kind == MatchKind::Pair) {
    if (target == Estimand::ATE) {
      throw IncompatibleError(
          "pair matching cannot target the ATE: it adjusts one group toward the other, "
          "not both toward the full sample");
    }
    if ((target == Estimand::ATT && ms.focal != Group::Treated) ||
        (target == Estimand::ATU && ms.focal != Group::Untreated)) {
      throw IncompatibleError("pair matching targets the group whose units were matched; this "
                              "structure cannot target the " + std::string(to_string(target)));
    }
  }

  double kept_t = 0.0, kept_c = 0.0;
  for (const auto& s : ms.strata) {
    for (std::size_t id : s) (treatments[id] == 1 ? kept_t : kept_c) += 1.0;
  }
  std::vector<double> w(treatments.size(), 0.0);
  for (const auto& s : ms.strata) {
    double st = 0.0, sc = 0.0;
    for (std::size_t id : s) (treatments[id] == 1 ? st : sc) += 1.0;
    const double size = st + sc;
    for (std::size_t id : s) {
      const bool treated = treatments[id] == 1;
      switch (target) {
        case Estimand::ATT:
          w[id] = treated ? 1.0 : (st / sc) * (kept_c / kept_t);
          break;
        case Estimand::ATU:
          w[id] = treated ? (sc / st) * (kept_t / kept_c) : 1.0;
          break;
        case Estimand::ATE:
        case Estimand::ATO:
          w[id] = treated ? size / st : size / sc;
          break;
      }
    }
  }

  Estimand label = target;
  std::string warning;
  const std::size_t lost_t = ms.discarded_in(treatments, 1);
  const std::size_t lost_c = ms.discarded_in(treatments, 0);
  const bool relabel = (target == Estimand::ATT && lost_t > 0) ||
                       (target == Estimand::ATU && lost_c > 0) ||
                       (target == Estimand::ATE && lost_t + lost_c > 0);
  if (relabel) {
    label = Estimand::ATO;
    warning = std::to_string(target == Estimand::ATU ? lost_c
                             : target == Estimand::ATT ? lost_t
                                                       : lost_t + lost_c) +
              " target-group units were discarded (caliper or common-support restriction); "
              "the estimand changes from " + std::string(to_string(target)) + " to ATO";
  }
  WeightVector out(std::move(w), label, ms.method + " strata weights");
  if (relabel) out.warnings.push_back(warning);
  return out;
}

}  // namespace etk
