// Serial reference kernels against the OpenMP versions.

#include <benchmark/benchmark.h>

#include <cstdint>

#include "bayesrank/inference.hpp"
#include "bayesrank/simulate.hpp"

namespace {

using namespace bayesrank;

struct Fixture {
  CapabilityMatrix matrix;
  ObservationVector obs;
};

Fixture make_fixture(std::uint32_t anchors, std::uint32_t queries) {
  SimulationConfig c;
  c.n_anchors = anchors;
  c.n_queries = queries;
  c.seed = 1;
  c.span_low = 0.05;
  c.span_high = 0.9;
  CapabilityMatrix m = synth_matrix(c);
  const TrialLog log = sample_test_model(m, 0.5, 10, 2);
  ObservationVector obs = observations_from_log(log, kSimulatedModelId, m);
  return {std::move(m), std::move(obs)};
}

void BM_PosteriorReference(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<std::uint32_t>(state.range(0)),
                                 static_cast<std::uint32_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::posterior(f.matrix, f.obs));
}

void BM_PosteriorParallel(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<std::uint32_t>(state.range(0)),
                                 static_cast<std::uint32_t>(state.range(1)));
  const LikelihoodOptions opts{.threads = static_cast<int>(state.range(2))};
  for (auto _ : state) benchmark::DoNotOptimize(posterior(f.matrix, f.obs, opts));
}

SimulationConfig robustness_config(int threads) {
  SimulationConfig c;
  c.seed = 3;
  c.replications = 200;
  c.threads = threads;
  return c;
}

void BM_RobustnessReference(benchmark::State& state) {
  const SimulationConfig c = robustness_config(1);
  for (auto _ : state) benchmark::DoNotOptimize(reference::run_robustness(c));
}

void BM_RobustnessParallel(benchmark::State& state) {
  const SimulationConfig c = robustness_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_robustness(c));
}

BENCHMARK(BM_PosteriorReference)->Args({6, 50})->Args({32, 400})->Args({128, 2000});
BENCHMARK(BM_PosteriorParallel)
    ->Args({6, 50, 1})
    ->Args({32, 400, 1})
    ->Args({32, 400, 4})
    ->Args({128, 2000, 1})
    ->Args({128, 2000, 4});
BENCHMARK(BM_RobustnessReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RobustnessParallel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
