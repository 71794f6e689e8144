#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "dualflow/dual1d.hpp"
#include "dualflow/geometry.hpp"
#include "dualflow/planar.hpp"
#include "dualflow/sde.hpp"
#include "dualflow/stats.hpp"

using namespace dualflow;

namespace {

void BM_Normals(benchmark::State& state) {
  RandomStream rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
}
BENCHMARK(BM_Normals);

void BM_BrownianPath(benchmark::State& state) {
  const TimeGrid grid(1.0, static_cast<std::size_t>(state.range(0)));
  std::uint64_t replica = 0;
  for (auto _ : state) {
    RandomStream rng(1, replica++);
    benchmark::DoNotOptimize(brownian_path(rng, grid));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BrownianPath)->Arg(1000)->Arg(10000);

void BM_FootPoint(benchmark::State& state) {
  const auto e = make_ellipse(2.0, 1.0, static_cast<std::size_t>(state.range(0)));
  RandomStream rng(2, 0);
  std::vector<Vec2> queries;
  for (int i = 0; i < 256; ++i) queries.push_back(sample_uniform_planar(e, rng));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(foot_point(queries[i++ % queries.size()], e));
}
BENCHMARK(BM_FootPoint)->Arg(256)->Arg(1024)->Arg(4096);

void BM_Resample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto nodes = ellipse_nodes(2.0, 1.0, n);
  for (auto _ : state) benchmark::DoNotOptimize(resample_equal_arclength(nodes, n));
}
BENCHMARK(BM_Resample)->Arg(256)->Arg(1024)->Arg(4096);

void BM_PlanarStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double dt = 1e-4;
  const double bw = bandwidth_for(dt);
  PlanarDualState initial = make_planar_state(make_ellipse(2.0, 1.0, n), {0.3, 0.2});
  PlanarDualState s = initial;
  RandomStream rng(3, 0);
  const double sd = std::sqrt(dt);
  for (auto _ : state) {
    const auto info = planar_step(s, {rng.normal(sd), rng.normal(sd)}, dt, bw);
    if (info.stop != StopReason::none || s.steps > 200) {
      state.PauseTiming();
      s = initial;
      state.ResumeTiming();
    }
  }
}
BENCHMARK(BM_PlanarStep)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_KsOneSample(benchmark::State& state) {
  RandomStream rng(4, 0);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = rng.uniform();
  const auto sample = EmpiricalSample::from_unsorted(v);
  for (auto _ : state) benchmark::DoNotOptimize(ks_one_sample(sample, uniform01_cdf));
}
BENCHMARK(BM_KsOneSample)->Arg(10000)->Arg(100000);

void BM_PitmanDual(benchmark::State& state) {
  const TimeGrid grid(1.0, 10000);
  std::uint64_t replica = 0;
  for (auto _ : state) {
    RandomStream rng(5, replica++);
    const auto x = brownian_path(rng, grid);
    benchmark::DoNotOptimize(skorokhod_reflect(x));
  }
}
BENCHMARK(BM_PitmanDual);

}  // namespace

BENCHMARK_MAIN();
