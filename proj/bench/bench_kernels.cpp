#include <benchmark/benchmark.h>

#include <random>

#include "fairaudit/decomposition.hpp"
#include "fairaudit/kernels.hpp"
#include "fairaudit/synth.hpp"

using namespace fairaudit;

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = z(rng);
  return m;
}

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void BM_NearestNeighbors(benchmark::State& state) {
  const auto ref = gaussian(4000, 20, 1);
  const auto queries = gaussian(1000, 20, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(nearest_neighbors(ref, queries, 5, mode(state)));
  state.SetItemsProcessed(state.iterations() * 1000);
}

void BM_NearestNeighborsBruteForce(benchmark::State& state) {
  const auto ref = gaussian(4000, 20, 1);
  const auto queries = gaussian(1000, 20, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_neighbors_reference(ref, queries, 5));
  state.SetItemsProcessed(state.iterations() * 1000);
}

void BM_EnsembleTrain(benchmark::State& state) {
  const auto spec = DiscreteSynthSpec::default_spec();
  const auto eval = gen_discrete(spec, 500, 3).data;
  LearnerSpec tree;
  tree.kind = LearnerKind::Tree;
  tree.max_depth = 4;
  const auto source = TrainingSource::fresh(
      [spec](std::size_t n, std::uint64_t s) { return gen_discrete(spec, n, s).data; });
  for (auto _ : state)
    benchmark::DoNotOptimize(ensemble_train(tree, source, 50, 200, eval, 9, 0.5, mode(state)));
  state.SetItemsProcessed(state.iterations() * 50);
}

}  // namespace

BENCHMARK(BM_NearestNeighbors)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestNeighborsBruteForce)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleTrain)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
