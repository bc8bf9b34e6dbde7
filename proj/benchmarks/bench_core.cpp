#include <benchmark/benchmark.h>

#include <cmath>

#include "bitflip/analytics.hpp"
#include "bitflip/coupling.hpp"
#include "bitflip/distributions.hpp"
#include "bitflip/engine.hpp"
#include "bitflip/random.hpp"

using namespace bitflip;

static void BM_QuantileGeometric(benchmark::State& state) {
  const auto d = BitDistribution::geometric(0.3);
  RngStream rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(d.quantile(rng.uniform()));
}
BENCHMARK(BM_QuantileGeometric);

static void BM_QuantileStretched(benchmark::State& state) {
  const auto d = BitDistribution::stretched_exp(1.0, 0.3);
  RngStream rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(d.quantile(rng.uniform()));
}
BENCHMARK(BM_QuantileStretched);

// Steps per second of a BF return-time run that is long enough to be censored.
static void BM_ReturnTimeSteps(benchmark::State& state) {
  const auto d = BitDistribution::geometric(0.25);
  const std::int64_t horizon = state.range(0);
  RngStream rng(2);
  std::int64_t steps = 0;
  for (auto _ : state) {
    const auto out = run_return_time(d, BitState::with_active(Model::BF, std::vector<BitIndex>{40}), horizon, rng);
    steps += out.value_or_horizon();
  }
  state.SetItemsProcessed(steps);
}
BENCHMARK(BM_ReturnTimeSteps)->Arg(100'000);

static void BM_SnapshotPerBit(benchmark::State& state) {
  const auto d = BitDistribution::stretched_exp(1.0, 0.5);
  const double t = std::exp(25.0);
  RngStream rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(sample_snapshot(Model::DB, d, t, SnapshotMethod::PerBit, rng));
}
BENCHMARK(BM_SnapshotPerBit);

static void BM_GroundOccupancyWindowed(benchmark::State& state) {
  const auto d = BitDistribution::geometric(0.7);
  RngStream rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(sample_ground_occupancy(Model::BF, d, 1e7, rng));
}
BENCHMARK(BM_GroundOccupancyWindowed);

static void BM_GroundIntegrand(benchmark::State& state) {
  const GroundIntegrand phi(Model::BF, BitDistribution::geometric(0.3), 1e8);
  double t = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(phi.log_value(t));
    t = t < 1e8 ? t * 1.37 : 1.0;
  }
}
BENCHMARK(BM_GroundIntegrand);

static void BM_OccupancyQuadrature(benchmark::State& state) {
  const auto d = BitDistribution::geometric(0.7);
  for (auto _ : state) benchmark::DoNotOptimize(ground_occupancy_bf(d));
}
BENCHMARK(BM_OccupancyQuadrature)->Unit(benchmark::kMillisecond);

static void BM_CoupledStep(benchmark::State& state) {
  CoupledPair pair(BitDistribution::geometric(0.4), 5);
  RngStream rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(pair.step(rng.uniform()));
}
BENCHMARK(BM_CoupledStep);
BENCHMARK_MAIN();
