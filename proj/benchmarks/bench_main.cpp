#include <benchmark/benchmark.h>

#include "jsqd/diffusion.hpp"
#include "jsqd/meanfield.hpp"
#include "jsqd/simulator.hpp"

namespace {

using namespace jsqd;

void BM_SimulatorStep(benchmark::State& state) {
  const ModelParams p(state.range(0), 2, 2, 2.0, 1.0);
  auto s = AggregateState::rounded(fixed_point(p).pi, p.servers());
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(step(s, p, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SimulatorStep)->Arg(100)->Arg(1600)->Arg(100000);

void BM_FixedPoint(benchmark::State& state) {
  const ModelParams p(100, static_cast<int>(state.range(0)), 2, static_cast<double>(state.range(0)), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(fixed_point(p).residual);
}
BENCHMARK(BM_FixedPoint)->Arg(2)->Arg(10)->Arg(40);

void BM_StationaryStats(benchmark::State& state) {
  const ModelParams p(100, static_cast<int>(state.range(0)), 2, static_cast<double>(state.range(0)), 1.0);
  const auto fp = fixed_point(p);
  for (auto _ : state) benchmark::DoNotOptimize(stationary_stats(fp, p).sigma.sum());
}
BENCHMARK(BM_StationaryStats)->Arg(2)->Arg(10)->Arg(30);

void BM_MeanField(benchmark::State& state) {
  const ModelParams p(100, 10, 2, 10.0, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_mean_field(OccupancyTail::empty(10), p, 1.0, 1e-4).states.size());
  }
}
BENCHMARK(BM_MeanField);

}  // namespace
BENCHMARK_MAIN();
