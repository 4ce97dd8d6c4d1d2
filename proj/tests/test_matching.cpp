#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "etk/diagnostics.hpp"
#include "etk/estimation.hpp"
#include "etk/matching.hpp"
#include "etk/pipeline.hpp"
#include "etk/propensity.hpp"
#include "etk/surgery.hpp"
#include "etk/weighting.hpp"
#include "support.hpp"

namespace etk {
namespace {

using testing::logit_of;

const std::vector<double>& surgery_scores() {
  static const std::vector<double> e = surgery::stratum_scores();
  return e;
}

// Dataset whose only role is to carry treatments; matching runs on the
// supplied scores.
Dataset carrier(const std::vector<int>& t, const std::vector<double>& x) {
  std::vector<std::vector<double>> rows;
  for (double v : x) rows.push_back({v});
  return Dataset::from_columns({"X"}, rows, t);
}

struct Instance {
  Dataset dataset;
  std::vector<double> scores;
  std::vector<std::size_t> treated, control;
};

Instance random_instance(testing::Rng& rng, int nt, int nc) {
  std::vector<int> t;
  std::vector<double> e;
  for (int i = 0; i < nt + nc; ++i) {
    t.push_back(i < nt ? 1 : 0);
    e.push_back(testing::uniform(rng, 0.02, 0.98));
  }
  // Interleave the groups so ids do not encode treatment.
  for (std::size_t i = t.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(testing::uniform_int(rng, 0, static_cast<int>(i) - 1));
    std::swap(t[i - 1], t[j]);
  }
  Instance inst{carrier(t, e), e, {}, {}};
  for (std::size_t i = 0; i < t.size(); ++i) (t[i] ? inst.treated : inst.control).push_back(i);
  return inst;
}

std::set<std::size_t> matched_of_group(const MatchStructure& ms, const std::vector<int>& t, int g) {
  std::set<std::size_t> out;
  for (const auto& s : ms.strata) {
    for (std::size_t id : s) {
      if (t[id] == g) out.insert(id);
    }
  }
  return out;
}

// ---- greedy ---------------------------------------------------------------

TEST(GreedyNN, SurgeryHandTrace) {
  const Dataset d = surgery::observed();
  const MatchStructure ms = greedy_nn(d, surgery_scores(), MatchSpec{});
  EXPECT_EQ(ms.kind, MatchKind::Pair);
  EXPECT_EQ(ms.strata.size(), 4u);
  EXPECT_EQ(matched_of_group(ms, d.treatments(), 0), (std::set<std::size_t>{4, 5, 6, 7}));
  std::vector<double> ys;
  for (std::size_t id : {4, 5, 6, 7}) ys.push_back(*d.unit(id).outcome);
  EXPECT_EQ(ys, (std::vector<double>{40, 40, 70, 50}));
  // Exactly one cross-stratum pair: the third X=0 treated unit with a control at 0.2.
  int cross = 0;
  for (const auto& s : ms.strata) cross += surgery_scores()[s[0]] != surgery_scores()[s[1]];
  EXPECT_EQ(cross, 1);
  const WeightVector w = match_to_weights(ms, Estimand::ATT, d.treatments());
  EXPECT_EQ(w.target, Estimand::ATT);
  EXPECT_NEAR(hajek_contrast(d, w).point, 12.5, 1e-12);
}

TEST(GreedyNN, FollowsTheStatedRuleOnRandomInstances) {
  testing::Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    const int nt = testing::uniform_int(rng, 1, 6);
    const Instance inst = random_instance(rng, nt, testing::uniform_int(rng, nt, 9));
    const MatchStructure ms = greedy_nn(inst.dataset, inst.scores, MatchSpec{});
    // Independent replay of the rule.
    std::vector<std::size_t> order = inst.treated;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return inst.scores[a] > inst.scores[b];
    });
    std::set<std::size_t> used;
    std::map<std::size_t, std::size_t> expected;
    for (std::size_t f : order) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c : inst.control) {
        if (used.count(c)) continue;
        const double dd = std::fabs(logit_of(inst.scores[f]) - logit_of(inst.scores[c]));
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      used.insert(best);
      expected[f] = best;
    }
    ASSERT_EQ(ms.strata.size(), expected.size());
    for (const auto& s : ms.strata) {
      ASSERT_EQ(s.size(), 2u);
      const std::size_t f = inst.dataset.treatments()[s[0]] ? s[0] : s[1];
      const std::size_t c = f == s[0] ? s[1] : s[0];
      EXPECT_EQ(expected[f], c);
    }
  }
}

TEST(GreedyNN, IdenticalScoreMultisetsGiveZeroDistance) {
  const std::vector<int> t = {1, 0, 1, 0, 0, 1};
  const std::vector<double> e = {0.3, 0.7, 0.7, 0.5, 0.3, 0.5};
  const MatchStructure ms = greedy_nn(carrier(t, e), e, MatchSpec{});
  EXPECT_EQ(ms.total_distance, 0.0);
}

TEST(GreedyNN, ZeroCaliperIsIllegal) {
  MatchSpec spec;
  spec.caliper = 0.0;
  EXPECT_THROW(greedy_nn(surgery::observed(), surgery_scores(), spec), ValidationError);
  spec.caliper = -1.0;
  EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(GreedyNN, NeedsEnoughControls) {
  const std::vector<int> t = {1, 1, 1, 0};
  const std::vector<double> e = {0.3, 0.4, 0.5, 0.6};
  EXPECT_THROW(greedy_nn(carrier(t, e), e, MatchSpec{}), ValidationError);
  MatchSpec two;
  two.ratio = 2;
  EXPECT_THROW(greedy_nn(surgery::observed(), surgery_scores(), two), ValidationError);
}

TEST(GreedyNN, CaliperDiscardsUnmatchableTreated) {
  MatchSpec spec;
  spec.caliper = 0.1;
  const Dataset d = surgery::observed();
  const MatchStructure ms = greedy_nn(d, surgery_scores(), spec);
  // The third X=0 treated unit has no control at 0.6 left.
  EXPECT_EQ(ms.discarded_in(d.treatments(), 1), 1u);
  const WeightVector w = match_to_weights(ms, Estimand::ATT, d.treatments());
  EXPECT_EQ(w.target, Estimand::ATO);
  ASSERT_FALSE(w.warnings.empty());
  EXPECT_NE(w.warnings[0].find("ATO"), std::string::npos);
}

TEST(GreedyNN, AllDiscardedIsAnError) {
  const std::vector<int> t = {1, 0};
  const std::vector<double> e = {0.9, 0.1};
  MatchSpec spec;
  spec.caliper = 0.01;
  EXPECT_THROW(greedy_nn(carrier(t, e), e, spec), ValidationError);
}

TEST(GreedyNN, UntreatedFocalForAtu) {
  MatchSpec spec;
  spec.focal = Group::Untreated;
  const std::vector<int> t = {1, 1, 1, 0, 0};
  const std::vector<double> e = {0.2, 0.6, 0.9, 0.25, 0.55};
  const MatchStructure ms = greedy_nn(carrier(t, e), e, spec);
  EXPECT_EQ(ms.focal, Group::Untreated);
  EXPECT_EQ(ms.strata, (std::vector<std::vector<std::size_t>>{{0, 3}, {1, 4}}));
  EXPECT_EQ(match_to_weights(ms, Estimand::ATU, t).target, Estimand::ATU);
  EXPECT_THROW(match_to_weights(ms, Estimand::ATT, t), IncompatibleError);
}

// ---- optimal pair ---------------------------------------------------------

TEST(OptimalPair, SurgeryTotalDistance) {
  const Dataset d = surgery::observed();
  const MatchStructure ms = optimal_pair(d, surgery_scores(), MatchSpec{});
  EXPECT_NEAR(ms.total_distance, std::fabs(logit_of(0.6) - logit_of(0.2)), 1e-12);
  EXPECT_NEAR(ms.total_distance, 1.79176, 1e-5);
  EXPECT_NEAR(structure_distance(d, surgery_scores(), ms), ms.total_distance, 1e-12);

  // Brute force over all 6*5*4*3 assignments.
  std::vector<std::vector<double>> cost;
  for (std::size_t i : {0, 1, 2, 3}) {
    std::vector<double> row;
    for (std::size_t j : {4, 5, 6, 7, 8, 9}) {
      row.push_back(std::fabs(logit_of(surgery_scores()[i]) - logit_of(surgery_scores()[j])));
    }
    cost.push_back(row);
  }
  EXPECT_NEAR(testing::brute_force_assignment(cost), ms.total_distance, 1e-12);
}

TEST(OptimalPair, IdenticalScoresGiveZero) {
  const std::vector<int> t = {1, 0, 1, 0};
  const std::vector<double> e = {0.4, 0.4, 0.4, 0.4};
  EXPECT_EQ(optimal_pair(carrier(t, e), e, MatchSpec{}).total_distance, 0.0);
}

TEST(OptimalPair, NeverWorseThanGreedy) {
  testing::Rng rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    const int nt = testing::uniform_int(rng, 1, 15);
    const Instance inst = random_instance(rng, nt, testing::uniform_int(rng, nt, 25));
    const double opt = optimal_pair(inst.dataset, inst.scores, MatchSpec{}).total_distance;
    const double greedy = greedy_nn(inst.dataset, inst.scores, MatchSpec{}).total_distance;
    EXPECT_LE(opt, greedy + 1e-9);
  }
}

TEST(OptimalPair, EqualsBruteForceOnSmallInstances) {
  testing::Rng rng(100);
  for (int rep = 0; rep < 200; ++rep) {
    const int ratio = rep % 4 == 0 ? 2 : 1;
    const int nt = testing::uniform_int(rng, 1, ratio == 1 ? 6 : 3);
    const Instance inst = random_instance(rng, nt, testing::uniform_int(rng, nt * ratio, 6));
    MatchSpec spec;
    spec.ratio = ratio;
    const MatchStructure ms = optimal_pair(inst.dataset, inst.scores, spec);
    std::vector<std::vector<double>> cost;
    for (std::size_t i : inst.treated) {
      std::vector<double> row;
      for (std::size_t j : inst.control) {
        row.push_back(std::fabs(logit_of(inst.scores[i]) - logit_of(inst.scores[j])));
      }
      cost.push_back(row);
    }
    EXPECT_NEAR(ms.total_distance, testing::brute_force_assignment(cost, ratio), 1e-9);
    for (const auto& s : ms.strata) EXPECT_EQ(s.size(), static_cast<std::size_t>(ratio + 1));
  }
}

TEST(OptimalPair, CovariateDistance) {
  const std::vector<int> t = {1, 0, 0, 1, 0};
  const std::vector<std::vector<double>> rows = {{0, 0}, {0, 0.1}, {5, 5}, {5, 5.2}, {9, 9}};
  const Dataset d = Dataset::from_columns({"A", "B"}, rows, t);
  MatchSpec spec;
  spec.distance = Distance::CovariateEuclidean;
  const MatchStructure ms = optimal_pair(d, {}, spec);
  EXPECT_EQ(ms.strata, (std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}}));
}

// ---- full matching --------------------------------------------------------

TEST(FullMatching, SurgeryGroupsByScore) {
  const Dataset d = surgery::observed();
  const MatchStructure ms = full_matching(d, surgery_scores(), MatchSpec{});
  EXPECT_EQ(ms.total_distance, 0.0);
  EXPECT_TRUE(ms.discarded.empty());
  EXPECT_EQ(ms.strata, (std::vector<std::vector<std::size_t>>{{0, 1, 2, 4, 5}, {3, 6, 7, 8, 9}}));
  const WeightVector ate = match_to_weights(ms, Estimand::ATE, d.treatments());
  EXPECT_NEAR(hajek_contrast(d, ate).point, -5.0 / 6.0, 1e-10);
  const WeightVector att = match_to_weights(ms, Estimand::ATT, d.treatments());
  EXPECT_NEAR(hajek_contrast(d, att).point, 16.25, 1e-10);
}

TEST(FullMatching, OneTreatedTakesEverything) {
  const std::vector<int> t = {0, 0, 1, 0, 0};
  const std::vector<double> e = {0.1, 0.3, 0.5, 0.7, 0.9};
  const MatchStructure ms = full_matching(carrier(t, e), e, MatchSpec{});
  EXPECT_EQ(ms.strata, (std::vector<std::vector<std::size_t>>{{0, 1, 2, 3, 4}}));
}

TEST(FullMatching, EqualsPartitionBruteForce) {
  testing::Rng rng(4242);
  for (int rep = 0; rep < 150; ++rep) {
    const int n = testing::uniform_int(rng, 2, 8);
    const int nt = testing::uniform_int(rng, 1, n - 1);
    const Instance inst = random_instance(rng, nt, n - nt);
    const MatchStructure ms = full_matching(inst.dataset, inst.scores, MatchSpec{});
    const auto& t = inst.dataset.treatments();
    EXPECT_TRUE(ms.check(t).empty());
    EXPECT_TRUE(ms.discarded.empty());
    const double oracle = testing::brute_force_full_matching(t, [&](std::size_t a, std::size_t b) {
      return std::fabs(logit_of(inst.scores[a]) - logit_of(inst.scores[b]));
    });
    EXPECT_NEAR(ms.total_distance, oracle, 1e-9);
    EXPECT_NEAR(structure_distance(inst.dataset, inst.scores, ms), oracle, 1e-9);
  }
}

TEST(FullMatching, UsesEveryUnitOnLargerInstances) {
  testing::Rng rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const Instance inst = random_instance(rng, testing::uniform_int(rng, 5, 40),
                                          testing::uniform_int(rng, 5, 40));
    const MatchStructure ms = full_matching(inst.dataset, inst.scores, MatchSpec{});
    std::size_t used = 0;
    for (const auto& s : ms.strata) used += s.size();
    EXPECT_EQ(used, inst.dataset.size());
    EXPECT_TRUE(ms.check(inst.dataset.treatments()).empty());
  }
}

TEST(FullMatching, CaliperDiscardsIsolatedUnits) {
  const std::vector<int> t = {1, 0, 1, 0, 1};
  const std::vector<double> e = {0.5, 0.52, 0.51, 0.49, 0.99};
  MatchSpec spec;
  spec.caliper = 0.2;
  const Dataset d = carrier(t, e);
  const MatchStructure ms = full_matching(d, e, spec);
  EXPECT_EQ(ms.discarded, std::vector<std::size_t>{4});
  EXPECT_EQ(match_to_weights(ms, Estimand::ATE, t).target, Estimand::ATO);

  const std::vector<int> t2 = {1, 0};
  const std::vector<double> e2 = {0.9, 0.1};
  MatchSpec tight;
  tight.caliper = 0.01;
  EXPECT_THROW(full_matching(carrier(t2, e2), e2, tight), ValidationError);
}

// ---- fine stratification --------------------------------------------------

TEST(FineStratification, SurgeryTwoStrataAreTheXStrata) {
  MatchSpec spec;
  spec.strata_count = 2;
  const Dataset d = surgery::observed();
  const MatchStructure ms = fine_stratification(d, surgery_scores(), spec);
  EXPECT_EQ(ms.strata, (std::vector<std::vector<std::size_t>>{{0, 1, 2, 4, 5}, {3, 6, 7, 8, 9}}));
  EXPECT_NEAR(hajek_contrast(d, match_to_weights(ms, Estimand::ATE, d.treatments())).point,
              -5.0 / 6.0, 1e-10);
  EXPECT_NEAR(stratified_estimate(d, ms, Estimand::ATE).point, -5.0 / 6.0, 1e-10);
}

TEST(FineStratification, OneStratumIsNoAdjustment) {
  MatchSpec spec;
  spec.strata_count = 1;
  const Dataset d = surgery::observed();
  const MatchStructure ms = fine_stratification(d, surgery_scores(), spec);
  ASSERT_EQ(ms.strata.size(), 1u);
  EXPECT_EQ(ms.strata[0].size(), 10u);
  const WeightVector w = match_to_weights(ms, Estimand::ATE, d.treatments());
  EXPECT_NEAR(hajek_contrast(d, w).point, 62.5 - 340.0 / 6.0, 1e-10);
}

TEST(FineStratification, AllSingletonStrataIsAnError) {
  const std::vector<int> t = {1, 0, 1, 0};
  const std::vector<double> e = {0.2, 0.4, 0.6, 0.8};
  MatchSpec spec;
  spec.strata_count = 4;
  EXPECT_THROW(fine_stratification(carrier(t, e), e, spec), ValidationError);
  spec.strata_count = 5;
  EXPECT_THROW(fine_stratification(carrier(t, e), e, spec), ValidationError);
  spec.strata_count = 3;
  EXPECT_THROW(fine_stratification(surgery::observed(), surgery_scores(), spec), ValidationError);
}

TEST(FineStratification, DiscardsSingleGroupStrata) {
  const std::vector<int> t = {1, 1, 0, 1, 0, 0};
  const std::vector<double> e = {0.9, 0.8, 0.5, 0.45, 0.1, 0.15};
  MatchSpec spec;
  spec.strata_count = 3;
  const MatchStructure ms = fine_stratification(carrier(t, e), e, spec);
  EXPECT_EQ(ms.strata, (std::vector<std::vector<std::size_t>>{{2, 3}}));
  EXPECT_EQ(ms.discarded, (std::vector<std::size_t>{0, 1, 4, 5}));
}

// ---- CEM ------------------------------------------------------------------

TEST(Cem, SurgeryStrataAndAttEstimate) {
  const Dataset d = surgery::observed();
  const MatchStructure ms = cem(d, MatchSpec{});
  EXPECT_EQ(ms.strata, (std::vector<std::vector<std::size_t>>{{0, 1, 2, 4, 5}, {3, 6, 7, 8, 9}}));
  EXPECT_TRUE(ms.discarded.empty());
  const WeightVector w = match_to_weights(ms, Estimand::ATT, d.treatments());
  // Control weights proportional to 3/2 in X=0 and 1/4 in X=1.
  EXPECT_NEAR(w.weights[4] / w.weights[6], (3.0 / 2.0) / (1.0 / 4.0), 1e-12);
  for (std::size_t i : {0, 1, 2, 3}) EXPECT_EQ(w.weights[i], 1.0);
  EXPECT_NEAR(hajek_contrast(d, w).point, 16.25, 1e-10);
  const WeightVector s = smr(surgery_scores(), d.treatments(), Estimand::ATT);
  EXPECT_NEAR(hajek_contrast(d, w).point, hajek_contrast(d, s).point, 1e-8);
}

TEST(Cem, IdenticalCovariatesFormOneStratum) {
  const Dataset d = Dataset::from_columns({"A", "B"}, {{1, 2}, {1, 2}, {1, 2}}, {1, 0, 0});
  const MatchStructure ms = cem(d, MatchSpec{});
  EXPECT_EQ(ms.strata, (std::vector<std::vector<std::size_t>>{{0, 1, 2}}));
}

TEST(Cem, CoarsensContinuousCovariates) {
  std::vector<std::vector<double>> rows;
  std::vector<int> t;
  for (int i = 0; i < 8; ++i) {
    rows.push_back({i * 1.0, static_cast<double>(i % 2)});
    t.push_back(i < 4 ? 1 : 0);
  }
  MatchSpec spec;
  // Two bins on C separate the groups completely.
  spec.cem_bins = 2;
  EXPECT_THROW(cem(Dataset::from_columns({"C", "B"}, rows, t), spec), ValidationError);
  spec.cem_bins = 1;
  const MatchStructure one = cem(Dataset::from_columns({"C", "B"}, rows, t), spec);
  EXPECT_EQ(one.strata, (std::vector<std::vector<std::size_t>>{{0, 2, 4, 6}, {1, 3, 5, 7}}));
}

TEST(Cem, NoMixedStratumIsAnError) {
  const Dataset d = Dataset::from_columns({"B"}, {{0}, {0}, {1}, {1}}, {1, 1, 0, 0});
  EXPECT_THROW(cem(d, MatchSpec{}), ValidationError);
}

// ---- cardinality ----------------------------------------------------------

std::vector<std::vector<double>> covariates_of(const Dataset& d) {
  std::vector<std::vector<double>> x;
  for (const Unit& u : d.units()) x.push_back(u.covariates);
  return x;
}

MatchSpec with_delta(std::vector<double> delta) {
  MatchSpec spec;
  spec.balance_tolerance = std::move(delta);
  return spec;
}

TEST(Cardinality, SurgeryMatchesBruteForce) {
  const Dataset d = surgery::observed();
  const MatchStructure ms = cardinality_matching(d, with_delta({0.1}));
  const auto oracle = testing::brute_force_cardinality(covariates_of(d), d.treatments(), {0.1});
  ASSERT_TRUE(oracle.has_value());
  ASSERT_EQ(ms.strata.size(), 1u);
  EXPECT_EQ(ms.strata[0], oracle->selected);
}

TEST(Cardinality, BalancedOrUnconstrainedKeepsEveryone) {
  const Dataset balanced =
      Dataset::from_columns({"X"}, {{0}, {1}, {2}, {0}, {1}, {2}}, {1, 1, 1, 0, 0, 0});
  EXPECT_TRUE(cardinality_matching(balanced, with_delta({0.01})).discarded.empty());
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(cardinality_matching(surgery::observed(), with_delta({inf})).discarded.empty());
}

TEST(Cardinality, NeedsTolerance) {
  EXPECT_THROW(cardinality_matching(surgery::observed(), MatchSpec{}), ValidationError);
  EXPECT_THROW(cardinality_matching(surgery::observed(), with_delta({0.1, 0.2})), ValidationError);
  EXPECT_THROW(cardinality_matching(surgery::observed(), with_delta({0.0})), ValidationError);
}

TEST(Cardinality, ExactSolverEqualsBruteForce) {
  testing::Rng rng(555);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = static_cast<std::size_t>(testing::uniform_int(rng, 4, 12));
    const std::size_t p = static_cast<std::size_t>(testing::uniform_int(rng, 1, 3));
    const Dataset d = testing::random_dataset(rng, n, p, 1.5, 1, false);
    std::vector<double> delta;
    if (rep % 2 == 0) {
      delta = {testing::uniform(rng, 0.02, 0.4)};
    } else {
      for (std::size_t j = 0; j < p; ++j) delta.push_back(testing::uniform(rng, 0.02, 0.4));
    }
    const auto oracle = testing::brute_force_cardinality(covariates_of(d), d.treatments(), delta);
    if (!oracle) {
      EXPECT_THROW(cardinality_matching(d, with_delta(delta)), ValidationError);
      continue;
    }
    const MatchStructure ms = cardinality_matching(d, with_delta(delta));
    ASSERT_EQ(ms.strata.size(), 1u);
    EXPECT_EQ(ms.strata[0], oracle->selected) << "instance " << rep;
  }
}

TEST(Cardinality, LocalSearchReturnsABalancedSubset) {
  testing::Rng rng(808);
  for (int rep = 0; rep < 5; ++rep) {
    const Dataset d = testing::random_dataset(rng, 90, 2, 1.0, 31, false);
    ASSERT_GT(std::max(d.treated_count(), d.untreated_count()), kCardinalityExactLimit);
    const MatchStructure ms = cardinality_matching(d, with_delta({0.1}));
    EXPECT_NE(ms.method.find("local search"), std::string::npos);
    ASSERT_EQ(ms.strata.size(), 1u);
    EXPECT_TRUE(ms.check(d.treatments()).empty());
    // Balance is measured against the full-sample pooled SD.
    std::vector<double> w(d.size(), 0.0);
    for (std::size_t id : ms.strata[0]) w[id] = 1.0;
    for (std::size_t j = 0; j < d.covariate_count(); ++j) {
      EXPECT_LE(std::fabs(smd(d, j, w)), 0.1 + 1e-12);
    }
    EXPECT_GT(ms.strata[0].size(), d.size() / 2);
  }
}

// ---- weights from structures -----------------------------------------------

TEST(MatchToWeights, PairCannotTargetAte) {
  const Dataset d = surgery::observed();
  const MatchStructure ms = optimal_pair(d, surgery_scores(), MatchSpec{});
  EXPECT_THROW(match_to_weights(ms, Estimand::ATE, d.treatments()), IncompatibleError);
}

TEST(MatchToWeights, SingleStratumAteIsUniformWithinGroups) {
  MatchStructure ms;
  ms.strata = {{0, 1, 2, 3, 4}};
  const std::vector<int> t = {1, 0, 0, 1, 0};
  const WeightVector w = match_to_weights(ms, Estimand::ATE, t);
  EXPECT_EQ(w.weights, (std::vector<double>{2.5, 5.0 / 3, 5.0 / 3, 2.5, 5.0 / 3}));
  EXPECT_NEAR(ess(w.weights, t, Group::Treated), 2.0, 1e-12);
  EXPECT_NEAR(ess(w.weights, t, Group::Untreated), 3.0, 1e-12);
}

TEST(MatchToWeights, AttTreatedWeightsAreZeroOrOne) {
  testing::Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const Instance inst = random_instance(rng, testing::uniform_int(rng, 2, 10),
                                          testing::uniform_int(rng, 10, 20));
    MatchSpec spec;
    if (rep % 2) spec.caliper = testing::uniform(rng, 0.05, 1.0);
    const auto& t = inst.dataset.treatments();
    std::vector<MatchStructure> structures;
    try {
      structures.push_back(optimal_pair(inst.dataset, inst.scores, spec));
      structures.push_back(full_matching(inst.dataset, inst.scores, spec));
    } catch (const ValidationError&) {
      continue;
    }
    for (const auto& ms : structures) {
      const WeightVector w = match_to_weights(ms, Estimand::ATT, t);
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == 1) EXPECT_TRUE(w.weights[i] == 0.0 || w.weights[i] == 1.0);
      }
    }
  }
}

TEST(MatchToWeights, CaliperRelabelProperty) {
  testing::Rng rng(909);
  int relabeled = 0, kept = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const Dataset d = testing::random_dataset(rng, static_cast<std::size_t>(testing::uniform_int(rng, 20, 60)), 2, 1.2, 3);
    if (d.untreated_count() < d.treated_count()) continue;
    MethodParams params;
    params.match.caliper = testing::uniform(rng, 0.01, 1.0);
    params.pair_solver = rep % 2 ? PairSolver::Greedy : PairSolver::Optimal;
    Design design;
    try {
      design = run_design(d, Method::PairMatching, Estimand::ATT, params);
    } catch (const ValidationError&) {
      continue;
    }
    const bool lost = design.match->discarded_in(d.treatments(), 1) > 0;
    if (lost) {
      ++relabeled;
      EXPECT_EQ(design.estimand(), Estimand::ATO);
      bool warned = false;
      for (const auto& w : design.weights.warnings) warned |= w.find("ATO") != std::string::npos;
      EXPECT_TRUE(warned);
    } else {
      ++kept;
      EXPECT_EQ(design.estimand(), Estimand::ATT);
    }
  }
  EXPECT_GT(relabeled, 20);
  EXPECT_GT(kept, 5);
}

TEST(Matching, Deterministic) {
  testing::Rng rng(3);
  const Instance inst = random_instance(rng, 12, 20);
  MatchSpec spec;
  spec.strata_count = 4;
  spec.balance_tolerance = {0.2};
  auto same = [](const MatchStructure& a, const MatchStructure& b) {
    return a.strata == b.strata && a.discarded == b.discarded &&
           a.total_distance == b.total_distance;
  };
  EXPECT_TRUE(same(greedy_nn(inst.dataset, inst.scores, spec), greedy_nn(inst.dataset, inst.scores, spec)));
  EXPECT_TRUE(same(optimal_pair(inst.dataset, inst.scores, spec),
                   optimal_pair(inst.dataset, inst.scores, spec)));
  EXPECT_TRUE(same(full_matching(inst.dataset, inst.scores, spec),
                   full_matching(inst.dataset, inst.scores, spec)));
  EXPECT_TRUE(same(fine_stratification(inst.dataset, inst.scores, spec),
                   fine_stratification(inst.dataset, inst.scores, spec)));
  EXPECT_TRUE(same(cem(inst.dataset, spec), cem(inst.dataset, spec)));
  EXPECT_TRUE(same(cardinality_matching(inst.dataset, spec), cardinality_matching(inst.dataset, spec)));
}

TEST(MatchSpec, Validation) {
  MatchSpec s;
  EXPECT_NO_THROW(s.validate());
  s.ratio = 0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = MatchSpec{};
  s.strata_count = 0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = MatchSpec{};
  s.balance_tolerance = {-0.1};
  EXPECT_THROW(s.validate(), ValidationError);
}

}  // namespace
}  // namespace etk
