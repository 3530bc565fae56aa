#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "refscore/boost.hpp"
#include "refscore/features.hpp"
#include "refscore/forest.hpp"
#include "refscore/strategies.hpp"
#include "refscore/synthetic.hpp"
#include "refscore/text.hpp"
#include "refscore/tree.hpp"

namespace {

using namespace refscore;

struct Fixture {
  Corpus corpus;
  std::vector<int> labels;
  FeatureMatrix matrix;
  TermIndex index;
  std::vector<std::size_t> rows;

  explicit Fixture(std::size_t n) : corpus(generate_synthetic(SyntheticSpec::planted_demo(n, 0.1), 1)) {
    Experiment ex(corpus, LabelScheme(), FeatureConfig{InputSet::text, 1000});
    labels = ex.labels();
    rows.resize(ex.size());
    std::iota(rows.begin(), rows.end(), 0);
    matrix = ex.matrix_for(rows);
    index = TermIndex(corpus);
  }
};

const Fixture& fixture() {
  static const Fixture f(2000);
  return f;
}

void BM_Tokenize(benchmark::State& state) {
  const auto& a = fixture().corpus.front();
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(a.title, a.abstract, a.keywords));
}
BENCHMARK(BM_Tokenize);

void BM_SelectFeatures(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(select_features(f.index, f.rows, f.labels, 3, 1000, 0));
}
BENCHMARK(BM_SelectFeatures)->Unit(benchmark::kMillisecond);

void BM_FitTree(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(fit_tree(f.matrix, f.labels, 3, TreeParams{}, 1));
}
BENCHMARK(BM_FitTree)->Unit(benchmark::kMillisecond);

void BM_FitForest(benchmark::State& state) {
  const auto& f = fixture();
  ForestParams params;
  params.n_trees = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(f.matrix, f.labels, 3, params, 1));
}
BENCHMARK(BM_FitForest)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FitBoost(benchmark::State& state) {
  const auto& f = fixture();
  BoostParams params;
  params.n_rounds = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_boost(f.matrix, f.labels, 3, params));
}
BENCHMARK(BM_FitBoost)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
