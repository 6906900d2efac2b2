#include <benchmark/benchmark.h>

#include "fracns/dynamics.hpp"
#include "fracns/forcing.hpp"

using namespace fracns;

namespace {

void BM_Nonlinearity(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const double N = static_cast<double>(state.range(1));
  auto grid = WaveGrid::for_cutoff(dim, 1.0, N);
  Nonlinearity nl(grid, CutoffProfile::sharp(N));
  NoiseParams noise;
  noise.seed = 7;
  const auto u = sample_divfree_white_noise(grid, noise);
  SpectralField out(grid);
  for (auto _ : state) {
    nl.apply(u, out);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.counters["points"] = static_cast<double>(grid->points_per_axis());
}
BENCHMARK(BM_Nonlinearity)
    ->Args({3, 4})
    ->Args({3, 8})
    ->Args({3, 16})
    ->Args({3, 32})
    ->Args({2, 16})
    ->Args({2, 64})
    ->Args({2, 256})
    ->Unit(benchmark::kMillisecond);

void BM_ExponentialEulerStep(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const double N = static_cast<double>(state.range(1));
  auto grid = WaveGrid::for_cutoff(dim, 1.0, N);
  DynamicsConfig cfg;
  cfg.theta = 1.0;
  cfg.lambda = 1.0;
  cfg.cutoff_radius = N;
  cfg.horizon = 1.0;
  NoiseParams noise;
  noise.seed = 11;
  ExponentialEuler integ(grid, cfg, noise);
  auto u = sample_divfree_white_noise(grid, noise);
  std::uint64_t step = 0;
  for (auto _ : state) {
    integ.step(u, step++);
    benchmark::DoNotOptimize(u.data().data());
  }
}
BENCHMARK(BM_ExponentialEulerStep)
    ->Args({3, 4})
    ->Args({3, 8})
    ->Args({3, 32})
    ->Args({2, 64})
    ->Unit(benchmark::kMillisecond);

void BM_WhiteNoiseSample(benchmark::State& state) {
  auto grid = WaveGrid::for_cutoff(3, 1.0, static_cast<double>(state.range(0)));
  NoiseParams noise;
  std::uint64_t step = 0;
  for (auto _ : state) {
    auto u = sample_divfree_white_noise(grid, noise, step++);
    benchmark::DoNotOptimize(u.data().data());
  }
}
BENCHMARK(BM_WhiteNoiseSample)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
