// Serial reference vs OpenMP kernels, and fast vs conventional synthesis.
// Pass --benchmark_filter=... to narrow; sizes are kept small enough for a laptop.
#include "mrf/matching.hpp"
#include "mrf/nufft.hpp"
#include "mrf/simulator.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace mrf;

auto exec_of(benchmark::State const &state) -> Exec
{
  return state.range(1) ? Exec::Parallel : Exec::Serial;
}

struct Fixture
{
  Index n;
  SpiralSet spiral;
  TissuePhantom phantom;
  PhaseMap phase;

  explicit Fixture(Index size)
    : n{size}
    , spiral{[&] {
      SpiralParams p;
      p.matrix_size = size;
      return generate_spiral_set(p);
    }()}
    , phantom{make_three_tissue_phantom({size, size})}
    , phase{synthesize_phase_map({size, size}, canonical_direction("+x"))}
  {
  }
};

auto fixture(Index n) -> Fixture const &
{
  static std::map<Index, std::unique_ptr<Fixture>> cache;
  auto &slot = cache[n];
  if (!slot) { slot = std::make_unique<Fixture>(n); }
  return *slot;
}

void BM_NufftForward(benchmark::State &state)
{
  auto const &f = fixture(state.range(0));
  GriddingPlan const plan(f.spiral.kx, f.spiral.ky, {f.n, f.n});
  auto const img = weighted_mask(f.phantom.mask(0), &f.phase);
  for (auto _ : state) { benchmark::DoNotOptimize(plan.forward(img, exec_of(state))); }
  state.SetItemsProcessed(state.iterations() * f.spiral.n_samples());
}

void BM_NufftAdjoint(benchmark::State &state)
{
  auto const &f = fixture(state.range(0));
  GriddingPlan const plan(f.spiral.kx, f.spiral.ky, {f.n, f.n});
  auto const samples = plan.forward(weighted_mask(f.phantom.mask(0), &f.phase));
  for (auto _ : state) { benchmark::DoNotOptimize(plan.adjoint(samples, f.spiral.dcf, exec_of(state))); }
  state.SetItemsProcessed(state.iterations() * f.spiral.n_samples());
}

void BM_SimulateFast(benchmark::State &state)
{
  auto const &f = fixture(state.range(0));
  auto const srf = compute_spatial_responses(f.phantom, f.spiral, &f.phase);
  auto const sig = simulate_tissue_signals(f.phantom.tissues(), default_fisp_schedule(480));
  for (auto _ : state) { benchmark::DoNotOptimize(simulate_fast(srf, sig, {}, exec_of(state))); }
}

void BM_SimulateConventional(benchmark::State &state)
{
  auto const &f = fixture(state.range(0));
  auto const sig = simulate_tissue_signals(f.phantom.tissues(), default_fisp_schedule(480));
  SrfOptions opt;
  opt.exec = exec_of(state);
  for (auto _ : state) { benchmark::DoNotOptimize(simulate_conventional(f.phantom, sig, f.spiral, &f.phase, opt)); }
}

void BM_BuildDictionary(benchmark::State &state)
{
  auto const s = default_fisp_schedule(480);
  auto const t1 = make_grid({{100, 100, 3000}});
  auto const t2 = make_grid({{10, 20, 500}});
  for (auto _ : state) { benchmark::DoNotOptimize(build_dictionary(t1, t2, s, exec_of(state))); }
}

void BM_MatchSeries(benchmark::State &state)
{
  auto const &f = fixture(state.range(0));
  auto const schedule = default_fisp_schedule(480);
  auto const srf = compute_spatial_responses(f.phantom, f.spiral, &f.phase);
  auto series = simulate_fast(srf, simulate_tissue_signals(f.phantom.tissues(), schedule));
  series.schedule_hash = schedule.hash();
  auto const dict = build_dictionary(make_grid({{100, 50, 3000}}), make_grid({{10, 10, 500}}), schedule);
  MatchOptions opt;
  opt.exec = exec_of(state);
  for (auto _ : state) { benchmark::DoNotOptimize(match_series(series, dict, opt)); }
  state.SetItemsProcessed(state.iterations() * f.n * f.n);
}

// Args: {matrix size, parallel}.
BENCHMARK(BM_NufftForward)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NufftAdjoint)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateFast)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateConventional)->ArgsProduct({{64}, {0, 1}})->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_BuildDictionary)->ArgsProduct({{0}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatchSeries)->ArgsProduct({{64}, {0, 1}})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
