#pragma once

// Random instance generators and brute-force oracles. The oracles work on
// plain vectors and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "etk/core.hpp"

namespace etk::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double normal(Rng& rng, double mu = 0.0, double sd = 1.0) {
  return std::normal_distribution<double>(mu, sd)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Dataset with p standard-normal covariates and logistic treatment. Retries
// until both groups have at least min_group units.
inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t p, double signal = 0.8,
                              std::size_t min_group = 2, bool with_outcomes = true) {
  for (;;) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) names.push_back("X" + std::to_string(j + 1));
    std::vector<std::vector<double>> rows(n, std::vector<double>(p));
    std::vector<int> t(n);
    std::vector<std::optional<double>> y(n);
    std::size_t treated = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double eta = -0.2;
      for (std::size_t j = 0; j < p; ++j) {
        rows[i][j] = normal(rng);
        eta += signal * rows[i][j] / static_cast<double>(j + 1);
      }
      t[i] = uniform(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
      treated += static_cast<std::size_t>(t[i]);
      if (with_outcomes) {
        double m = 3.0 * t[i];
        for (std::size_t j = 0; j < p; ++j) m += rows[i][j];
        y[i] = m + normal(rng);
      }
    }
    if (treated >= min_group && n - treated >= min_group) {
      return Dataset::from_columns(names, rows, t, with_outcomes ? y : std::vector<std::optional<double>>{});
    }
  }
}

// Dataset with one discrete covariate taking values 0..levels-1, every
// (level, group) cell nonempty.
inline Dataset random_discrete_dataset(Rng& rng, std::size_t n, int levels) {
  for (;;) {
    std::vector<std::vector<double>> rows;
    std::vector<int> t;
    std::vector<std::optional<double>> y;
    std::map<std::pair<int, int>, int> cells;
    for (std::size_t i = 0; i < n; ++i) {
      const int x = uniform_int(rng, 0, levels - 1);
      const double e = 0.2 + 0.6 * (x + 0.5) / levels;
      const int ti = uniform(rng) < e ? 1 : 0;
      rows.push_back({static_cast<double>(x)});
      t.push_back(ti);
      y.push_back(10.0 * x + (2.0 + 3.0 * x) * ti + normal(rng, 0.0, 2.0));
      ++cells[{x, ti}];
    }
    if (cells.size() == static_cast<std::size_t>(2 * levels)) {
      return Dataset::from_columns({"X"}, rows, t, y);
    }
  }
}

// Exact stratification on a single discrete covariate: within-stratum mean
// differences combined by stratum size (ATE), treated count (ATT) or
// untreated count (ATU).
inline double stratified_oracle(const std::vector<double>& x, const std::vector<int>& t,
                                const std::vector<double>& y, Estimand target) {
  struct Cell {
    double sum_t = 0, sum_c = 0;
    int n_t = 0, n_c = 0;
  };
  std::map<double, Cell> cells;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& c = cells[x[i]];
    if (t[i] == 1) {
      c.sum_t += y[i];
      ++c.n_t;
    } else {
      c.sum_c += y[i];
      ++c.n_c;
    }
  }
  double num = 0, den = 0;
  for (const auto& [level, c] : cells) {
    const double effect = c.sum_t / c.n_t - c.sum_c / c.n_c;
    double w = c.n_t + c.n_c;
    if (target == Estimand::ATT) w = c.n_t;
    if (target == Estimand::ATU) w = c.n_c;
    num += w * effect;
    den += w;
  }
  return num / den;
}

// Minimum total cost of assigning each row `ratio` distinct columns, columns
// used at most once, by exhaustive recursion.
inline double brute_force_assignment(const std::vector<std::vector<double>>& cost, int ratio = 1) {
  const std::size_t rows = cost.size();
  const std::size_t cols = rows ? cost[0].size() : 0;
  std::vector<bool> used(cols, false);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, int, std::size_t, double)> rec =
      [&](std::size_t r, int taken, std::size_t from, double acc) {
        if (acc >= best) return;
        if (r == rows) {
          best = acc;
          return;
        }
        if (taken == ratio) {
          rec(r + 1, 0, 0, acc);
          return;
        }
        for (std::size_t c = from; c < cols; ++c) {
          if (used[c]) continue;
          used[c] = true;
          rec(r, taken + 1, c + 1, acc + cost[r][c]);
          used[c] = false;
        }
      };
  rec(0, 0, 0, 0.0);
  return best;
}

// Minimum over partitions of all units into blocks holding both groups of
// the sum of within-block treated/untreated pair costs.
inline double brute_force_full_matching(const std::vector<int>& t,
                                        const std::function<double(std::size_t, std::size_t)>& d) {
  const std::size_t n = t.size();
  std::vector<std::vector<std::size_t>> blocks;
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      double total = 0;
      for (const auto& b : blocks) {
        bool has_t = false, has_c = false;
        for (std::size_t u : b) (t[u] == 1 ? has_t : has_c) = true;
        if (!has_t || !has_c) return;
        for (std::size_t a : b) {
          for (std::size_t c : b) {
            if (t[a] == 1 && t[c] == 0) total += d(a, c);
          }
        }
      }
      best = std::min(best, total);
      return;
    }
    // Index access: the recursion appends to `blocks` and may reallocate it.
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      blocks[k].push_back(i);
      rec(i + 1);
      blocks[k].pop_back();
    }
    blocks.push_back({i});
    rec(i + 1);
    blocks.pop_back();
  };
  rec(0);
  return best;
}

struct CardinalityOracle {
  std::vector<std::size_t> selected;  // ascending ids
  std::size_t treated = 0;
  std::size_t untreated = 0;
};

// Enumerates every subset. Feasible: both groups nonempty and, for each
// covariate with a positive full-sample pooled SD s_j, |mean_T - mean_C| <=
// delta_j * s_j. Preference: more units, then more treated, then the
// lexicographically largest treated indicator vector (ids ascending), then the
// lexicographically largest untreated indicator vector.
inline std::optional<CardinalityOracle> brute_force_cardinality(
    const std::vector<std::vector<double>>& x, const std::vector<int>& t,
    const std::vector<double>& delta) {
  const std::size_t n = t.size();
  const std::size_t p = x.empty() ? 0 : x[0].size();
  std::vector<double> bound(p);
  for (std::size_t j = 0; j < p; ++j) {
    double mt = 0, mc = 0;
    int nt = 0, nc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (t[i] == 1) {
        mt += x[i][j];
        ++nt;
      } else {
        mc += x[i][j];
        ++nc;
      }
    }
    mt /= nt;
    mc /= nc;
    double vt = 0, vc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (t[i] == 1) {
        vt += (x[i][j] - mt) * (x[i][j] - mt);
      } else {
        vc += (x[i][j] - mc) * (x[i][j] - mc);
      }
    }
    vt = nt > 1 ? vt / (nt - 1) : 0.0;
    vc = nc > 1 ? vc / (nc - 1) : 0.0;
    const double s = std::sqrt((vt + vc) / 2.0);
    const double dj = delta.size() == 1 ? delta[0] : delta[j];
    bound[j] = (s > 0 && std::isfinite(dj)) ? dj * s : std::numeric_limits<double>::infinity();
  }

  std::optional<CardinalityOracle> best;
  std::vector<int> best_key;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<double> st(p, 0.0), sc(p, 0.0);
    std::size_t nt = 0, nc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!((mask >> i) & 1)) continue;
      for (std::size_t j = 0; j < p; ++j) (t[i] == 1 ? st : sc)[j] += x[i][j];
      (t[i] == 1 ? nt : nc)++;
    }
    if (nt == 0 || nc == 0) continue;
    bool ok = true;
    for (std::size_t j = 0; j < p && ok; ++j) {
      ok = std::fabs(st[j] / nt - sc[j] / nc) <= bound[j];
    }
    if (!ok) continue;
    // Key compared lexicographically: size, treated count, treated bits, untreated bits.
    std::vector<int> key = {static_cast<int>(nt + nc), static_cast<int>(nt)};
    for (std::size_t i = 0; i < n; ++i) {
      if (t[i] == 1) key.push_back(static_cast<int>((mask >> i) & 1));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (t[i] == 0) key.push_back(static_cast<int>((mask >> i) & 1));
    }
    if (!best || key > best_key) {
      best_key = key;
      CardinalityOracle o;
      for (std::size_t i = 0; i < n; ++i) {
        if ((mask >> i) & 1) o.selected.push_back(i);
      }
      o.treated = nt;
      o.untreated = nc;
      best = o;
    }
  }
  return best;
}

inline double logit_of(double e) { return std::log(e / (1.0 - e)); }

}  // namespace etk::testing
