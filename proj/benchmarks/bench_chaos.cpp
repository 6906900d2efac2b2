#include <benchmark/benchmark.h>

#include <memory>

#include "fracns/chaos.hpp"

using namespace fracns;

namespace {

void BM_GeneratorPlusLevel1(benchmark::State& state) {
  const int radius = static_cast<int>(state.range(0));
  auto box = std::make_shared<const ChaosBox>(3, 0.25, radius);
  const auto cutoff = CutoffProfile::sharp(4.0 * radius);
  const auto phi = random_chaos_vector(box, 1, 1, 3, 0);
  for (auto _ : state) {
    auto out = apply_G_plus(phi, cutoff);
    benchmark::DoNotOptimize(out.level(2).data());
  }
}
BENCHMARK(BM_GeneratorPlusLevel1)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_GeneratorMinusLevel3(benchmark::State& state) {
  auto box = std::make_shared<const ChaosBox>(3, 1.0, 1);
  const auto cutoff = CutoffProfile::sharp(1.0);
  const auto phi = random_chaos_vector(box, 3, 3, 5, 0);
  for (auto _ : state) {
    auto out = apply_G_minus(phi, cutoff);
    benchmark::DoNotOptimize(out.level(2).data());
  }
}
BENCHMARK(BM_GeneratorMinusLevel3)->Unit(benchmark::kMillisecond);

}  // namespace
