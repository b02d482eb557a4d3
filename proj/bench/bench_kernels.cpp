#include <benchmark/benchmark.h>

#include "graspsynth/design_search.hpp"
#include "graspsynth/tebc.hpp"

using namespace graspsynth;

namespace {

const VBeamGeometry kGeom = VBeamGeometry::from_degrees(40.0, 1.2, 5.0, 7.0);

DesignSpec bench_spec() {
  DesignSpec s;
  s.target_force = 21.6;
  s.bounds = {{30.0, 50.0}, {1.0, 1.4}, {4.0, 6.0}, {deg_to_rad(5.0), deg_to_rad(9.0)}, {10, 14}};
  s.stress_limit = 100.0;
  s.curve_samples = 200;
  return s;
}

void BM_ForceCurveSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(serial::force_curve(kGeom, MaterialModel{}, 5.0, n));
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_ForceCurveParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(force_curve(kGeom, MaterialModel{}, 5.0, n));
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_GridSearchSerial(benchmark::State& state) {
  const auto spec = bench_spec();
  const GridDensity d{6, 6, 4, 6, 3};
  for (auto _ : state) benchmark::DoNotOptimize(serial::grid_search(spec, d));
}

void BM_GridSearchParallel(benchmark::State& state) {
  const auto spec = bench_spec();
  const GridDensity d{6, 6, 4, 6, 3};
  for (auto _ : state) benchmark::DoNotOptimize(grid_search(spec, d));
}

}  // namespace

BENCHMARK(BM_ForceCurveSerial)->Arg(500)->Arg(20000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ForceCurveParallel)->Arg(500)->Arg(20000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GridSearchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridSearchParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
