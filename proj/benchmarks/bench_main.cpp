#include <benchmark/benchmark.h>

#include <random>

#include "etk/estimation.hpp"
#include "etk/matching.hpp"
#include "etk/propensity.hpp"
#include "etk/simulation.hpp"

namespace {

struct Instance {
  etk::Dataset dataset;
  std::vector<double> scores;
};

Instance make_instance(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("X" + std::to_string(j + 1));
  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  std::vector<int> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = -0.6;
    for (std::size_t j = 0; j < p; ++j) {
      rows[i][j] = z(rng);
      eta += 0.7 * rows[i][j] / static_cast<double>(j + 1);
    }
    t[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
  }
  Instance inst{etk::Dataset::from_columns(names, rows, t), {}};
  inst.scores = etk::fit_logistic(inst.dataset).scores;
  return inst;
}

void BM_FitLogistic(benchmark::State& state) {
  const Instance inst = make_instance(static_cast<std::size_t>(state.range(0)), 5, 1);
  for (auto _ : state) benchmark::DoNotOptimize(etk::fit_logistic(inst.dataset));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitLogistic)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_OptimalPair(benchmark::State& state) {
  const Instance inst = make_instance(static_cast<std::size_t>(state.range(0)), 3, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(etk::optimal_pair(inst.dataset, inst.scores, etk::MatchSpec{}));
  }
}
BENCHMARK(BM_OptimalPair)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond);

void BM_GreedyPair(benchmark::State& state) {
  const Instance inst = make_instance(static_cast<std::size_t>(state.range(0)), 3, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(etk::greedy_nn(inst.dataset, inst.scores, etk::MatchSpec{}));
  }
}
BENCHMARK(BM_GreedyPair)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond);

void BM_FullMatching(benchmark::State& state) {
  const Instance inst = make_instance(static_cast<std::size_t>(state.range(0)), 3, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(etk::full_matching(inst.dataset, inst.scores, etk::MatchSpec{}));
  }
}
BENCHMARK(BM_FullMatching)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);

void BM_CardinalityExact(benchmark::State& state) {
  const Instance inst = make_instance(static_cast<std::size_t>(state.range(0)), 2, 4);
  etk::MatchSpec spec;
  spec.balance_tolerance = {0.1};
  for (auto _ : state) benchmark::DoNotOptimize(etk::cardinality_matching(inst.dataset, spec));
}
BENCHMARK(BM_CardinalityExact)->DenseRange(12, 24, 4)->Unit(benchmark::kMillisecond);

void BM_CardinalityLocalSearch(benchmark::State& state) {
  const Instance inst = make_instance(static_cast<std::size_t>(state.range(0)), 3, 5);
  etk::MatchSpec spec;
  spec.balance_tolerance = {0.1};
  for (auto _ : state) benchmark::DoNotOptimize(etk::cardinality_matching(inst.dataset, spec));
}
BENCHMARK(BM_CardinalityLocalSearch)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
  const etk::SimulatedData sim = etk::generate(etk::scenarios::tail_frailty(500));
  const etk::Pipeline p = [](const etk::Dataset& d) {
    const auto m = etk::fit_logistic(d);
    std::vector<double> w(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      w[i] = d.treatments()[i] ? 1.0 - m.scores[i] : m.scores[i];
    }
    return etk::hajek_contrast(d, etk::WeightVector(w, etk::Estimand::ATO, "overlap"));
  };
  for (auto _ : state) benchmark::DoNotOptimize(etk::bootstrap(sim.dataset, p, 200, 7));
}
BENCHMARK(BM_Bootstrap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
