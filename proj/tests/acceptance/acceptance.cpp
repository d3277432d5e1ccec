// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include "../oracles.hpp"
#include "mrf/cost.hpp"
#include "mrf/instrument.hpp"
#include "mrf/matching.hpp"
#include "mrf/nufft.hpp"
#include "mrf/optimizer.hpp"
#include "mrf/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

using namespace mrf;

namespace {

int failures = 0;

void report(int id, std::string const &name, bool ok, std::string const &detail)
{
  std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

auto seconds_since(std::chrono::steady_clock::time_point t0) -> double
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

auto spiral_for(Index n) -> SpiralSet
{
  SpiralParams p;
  p.matrix_size = n;
  return generate_spiral_set(p);
}

auto frame_error(CxGrid const &a, CxGrid const &ref) -> double
{
  double num = 0, den = 0;
  for (Index i = 0; i < ref.size(); ++i) {
    num += std::norm(Cxd(a[i]) - Cxd(ref[i]));
    den += std::norm(Cxd(ref[i]));
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Default grids plus the phantom's own tissue values.
auto exact_dictionary(TissuePhantom const &ph, SequenceSchedule const &s) -> Dictionary
{
  auto t1r = default_t1_ranges();
  auto t2r = default_t2_ranges();
  for (auto const &t : ph.tissues()) {
    if (t.is_void()) { continue; }
    t1r.push_back({t.t1_ms, 1, t.t1_ms});
    t2r.push_back({t.t2_ms, 1, t.t2_ms});
  }
  return build_dictionary(make_grid(t1r), make_grid(t2r), s);
}

auto sorted_unique(std::vector<double> v) -> std::vector<double>
{
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

auto wm_error(QuantMaps const &maps, TissuePhantom const &ph) -> SegmentError
{
  return compute_segment_rmse(maps, ph, {"wm"}).front();
}

/// Normalized lag-(1, 0) autocorrelation magnitude: |sum e(r, c) conj(e(r + 1, c))| / sum |e|^2.
auto lag_row_autocorr(CxdGrid const &e) -> double
{
  Cxd num{0, 0};
  double den = 0;
  for (Index r = 0; r < e.rows(); ++r) {
    for (Index c = 0; c < e.cols(); ++c) {
      den += std::norm(e(r, c));
      if (r + 1 < e.rows()) { num += e(r, c) * std::conj(e(r + 1, c)); }
    }
  }
  return den > 0 ? std::abs(num) / den : 0;
}

void criterion_1()
{
  auto const t0 = std::chrono::steady_clock::now();
  Index const n = 64;
  auto const spiral = spiral_for(n);
  auto const ph = make_three_tissue_phantom({n, n});
  auto const phase = synthesize_phase_map({n, n}, canonical_direction("+x"));
  auto const sig = simulate_tissue_signals(ph.tissues(), default_fisp_schedule(96));
  auto const srf = compute_spatial_responses(ph, spiral, &phase);
  auto const fast = simulate_fast(srf, sig);
  auto const conv = simulate_conventional(ph, sig, spiral, &phase);
  double worst = 0;
  for (std::size_t t = 0; t < fast.frames.size(); ++t) { worst = std::max(worst, frame_error(fast.frames[t], conv.frames[t])); }
  double const secs = seconds_since(t0);
  std::ostringstream d;
  d << "max per-frame relative L2 = " << worst << " over " << fast.frames.size() << " frames, " << secs << " s";
  report(1, "factorization equivalence", fast.frames.size() == 96 && worst < 1e-6 && secs < 30, d.str());
}

void criterion_2()
{
  Index const n = 256;
  auto const spiral = spiral_for(n);
  auto const phase = synthesize_phase_map({n, n}, canonical_direction("+x"));
  auto const schedule = default_fisp_schedule(480);
  auto const three = benchmark(make_three_tissue_phantom({n, n}), spiral, &phase, schedule, {}, 3);
  auto const eleven = benchmark(make_eleven_tissue_phantom({n, n}), spiral, &phase, schedule, {}, 3);
  std::ostringstream d;
  d << "3 tissues " << three.speedup << "x (fast " << three.fast_ms << " ms, conventional " << three.conventional_ms
    << " ms); 11 tissues " << eleven.speedup << "x (fast " << eleven.fast_ms << " ms, conventional "
    << eleven.conventional_ms << " ms); fast-path NUFFT calls " << three.fast_nufft_calls + eleven.fast_nufft_calls;
  report(2, "speedup", three.speedup >= 20 && eleven.speedup >= 10 && three.fast_nufft_calls == 0 &&
                         eleven.fast_nufft_calls == 0, d.str());
}

void criterion_3()
{
  Shape2 const s{32, 32};
  auto const spiral = spiral_for(32);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  CxdGrid x(s);
  for (auto &v : x.span()) { v = {g(rng), g(rng)}; }
  std::vector<Cxd> y(static_cast<std::size_t>(spiral.n_samples()));
  for (auto &v : y) { v = {g(rng), g(rng)}; }
  GriddingPlan const plan(spiral.kx, spiral.ky, s);
  auto const fx = plan.forward(x);
  double const fwd = oracle::relative_l2(fx, oracle::direct_dft(x, spiral.kx, spiral.ky));
  auto const aty = plan.adjoint(y);
  Cxd lhs{0, 0}, rhs{0, 0};
  for (std::size_t m = 0; m < y.size(); ++m) { lhs += fx[m] * std::conj(y[m]); }
  for (Index p = 0; p < x.size(); ++p) { rhs += x[p] * std::conj(aty[p]); }
  double const adj = std::abs(lhs - rhs) / std::abs(lhs);
  std::ostringstream d;
  d << "forward vs direct DFT relative L2 = " << fwd << ", adjoint mismatch = " << adj;
  report(3, "NUFFT correctness", fwd < 1e-5 && adj < 1e-10, d.str());
}

struct Sampled
{
  QuantMaps full, under, full_tissue_only;
  double seconds = 0;
  TissuePhantom phantom;
  ImageSeries under_series, ideal;
};

auto sample_both(Index n, Index nt) -> Sampled
{
  auto const t0 = std::chrono::steady_clock::now();
  auto const spiral = spiral_for(n);
  auto ph = make_three_tissue_phantom({n, n});
  auto const schedule = default_fisp_schedule(nt);
  auto const sig = simulate_tissue_signals(ph.tissues(), schedule);
  auto const dict = exact_dictionary(ph, schedule);
  SrfOptions full;
  full.full_sampling = true;
  full.dcf_mode = DcfMode::Union;
  auto fs = simulate_fast(compute_spatial_responses(ph, spiral, nullptr, full), sig);
  auto us = simulate_fast(compute_spatial_responses(ph, spiral, nullptr), sig);
  fs.schedule_hash = us.schedule_hash = schedule.hash();
  std::vector<double> t1s, t2s;
  for (auto const &t : ph.tissues()) {
    t1s.push_back(t.t1_ms);
    t2s.push_back(t.t2_ms);
  }
  Sampled out{match_series(fs, dict), match_series(us, dict), {}, 0, ph, std::move(us), compose_series(ph, sig, nullptr)};
  out.full_tissue_only = match_series(fs, build_dictionary(sorted_unique(t1s), sorted_unique(t2s), schedule));
  out.seconds = seconds_since(t0);
  return out;
}

void criterion_4(Sampled const &s)
{
  Index inside = 0, wrong = 0, wrong_small = 0;
  for (Index i = 0; i < s.phantom.tissue_count(); ++i) {
    auto const &t = s.phantom.tissue(i);
    if (t.is_void()) { continue; }
    auto const &m = s.phantom.mask(i);
    for (Index p = 0; p < m.size(); ++p) {
      if (m[p] < 0.5) { continue; }
      ++inside;
      wrong += (s.full.t1[p] != t.t1_ms || s.full.t2[p] != t.t2_ms) ? 1 : 0;
      wrong_small += (s.full_tissue_only.t1[p] != t.t1_ms || s.full_tissue_only.t2[p] != t.t2_ms) ? 1 : 0;
    }
  }
  std::ostringstream d;
  d << wrong << " of " << inside << " in-mask pixels differ from ground truth (default grids plus tissue values; "
    << wrong_small << " with a tissue-only T1 x T2 dictionary); simulation and matching " << s.seconds << " s";
  report(4, "end-to-end identity", inside > 0 && wrong == 0, d.str());
}

void criterion_5(Sampled const &s)
{
  auto const u = wm_error(s.under, s.phantom);
  auto const f = wm_error(s.full, s.phantom);
  std::ostringstream d;
  d << "WM undersampled rmse_t1_rel = " << u.rmse_t1_rel << ", rmse_t2_rel = " << u.rmse_t2_rel
    << "; fully sampled rmse_t2_rel = " << f.rmse_t2_rel;
  report(5, "undersampling artifact direction", u.rmse_t2_rel > u.rmse_t1_rel && u.rmse_t2_rel > f.rmse_t2_rel, d.str());
}

void criterion_6(Sampled const &s)
{
  // Error of each undersampled frame against the unsampled composition, and an iid complex
  // Gaussian image of the same power.
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  double err_sum = 0, noise_sum = 0;
  Index const nt = s.under_series.n_timepoints();
  for (Index t = 0; t < nt; ++t) {
    auto const &a = s.under_series.frames[static_cast<std::size_t>(t)];
    auto const &b = s.ideal.frames[static_cast<std::size_t>(t)];
    CxdGrid e(a.shape()), w(a.shape());
    double power = 0;
    for (Index p = 0; p < a.size(); ++p) {
      e[p] = Cxd(a[p]) - Cxd(b[p]);
      power += std::norm(e[p]);
    }
    double const sd = std::sqrt(power / static_cast<double>(a.size()) / 2);
    for (auto &v : w.span()) { v = {sd * g(rng), sd * g(rng)}; }
    err_sum += lag_row_autocorr(e);
    noise_sum += lag_row_autocorr(w);
  }
  double const err = err_sum / static_cast<double>(nt), noise = noise_sum / static_cast<double>(nt);
  std::ostringstream d;
  d << "mean lag-(1,0) autocorrelation: error " << err << ", matched Gaussian " << noise << ", ratio " << err / noise;
  report(6, "structured vs Gaussian error", err >= 2 * noise, d.str());
}

auto random_params(std::uint64_t seed) -> ScheduleParams
{
  std::mt19937_64 rng(seed);
  auto p = default_schedule_params();
  std::uniform_real_distribution<double> flip(p.bounds.flip_min, p.bounds.flip_max);
  std::uniform_real_distribution<double> tr(p.bounds.tr_min, p.bounds.tr_max);
  for (auto &f : p.flip_amp_deg) { f = flip(rng); }
  for (auto &t : p.tr_base_ms) { t = tr(rng); }
  return p;
}

auto toy_objective(ScheduleParams const &target) -> Objective
{
  return [target](ScheduleParams const &p) {
    auto const &b = p.bounds;
    double s = 0;
    for (std::size_t k = 0; k < p.flip_amp_deg.size(); ++k) {
      double const a = (p.flip_amp_deg[k] - target.flip_amp_deg[k]) / (b.flip_max - b.flip_min);
      double const c = (p.tr_base_ms[k] - target.tr_base_ms[k]) / (b.tr_max - b.tr_min);
      s += a * a + c * c;
    }
    return s;
  };
}

void criterion_7()
{
  AnnealConfig toy;
  toy.initial_temp = 1e-3;
  toy.min_temp = 1e-8;

  // Best-so-far monotone on every toy run; 20 seeds converge within 1% (normalized RMS).
  bool monotone = true;
  int converged = 0;
  double worst = 0;
  std::size_t longest = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto const f = toy_objective(random_params(1000 + seed));
    toy.rng_seed = seed;
    auto const r = anneal(default_schedule_params(), f, toy);
    for (std::size_t i = 1; i < r.trace.size(); ++i) { monotone &= r.trace[i].best_cost <= r.trace[i - 1].best_cost; }
    double const rms = std::sqrt(r.best_cost / static_cast<double>(2 * r.best_params.n_segments()));
    worst = std::max(worst, rms);
    longest = std::max(longest, r.trace.size());
    converged += rms < 0.01 ? 1 : 0;
  }

  // Greedy limit: only improvements accepted.
  AnnealConfig greedy;
  greedy.initial_temp = 1e-4;
  greedy.min_temp = 1e-4;
  greedy.max_iterations = 2000;
  auto const gf = toy_objective(random_params(8));
  auto const gr = anneal(default_schedule_params(), gf, greedy);
  double current = gf(default_schedule_params());
  bool greedy_ok = true;
  for (auto const &row : gr.trace) {
    if (row.accepted) {
      greedy_ok &= row.cost <= current;
      current = row.cost;
    } else {
      greedy_ok &= row.cost > current;
    }
  }

  // Real objective: the spatial responses are computed once for the whole run.
  counters().reset();
  Index const n = 32;
  auto const ph = make_three_tissue_phantom({n, n});
  auto const phase = synthesize_phase_map({n, n}, canonical_direction("+x"));
  auto const srf = compute_spatial_responses(ph, spiral_for(n), &phase);
  ObjectiveContext ctx;
  ctx.srf = &srf;
  ctx.phantom = &ph;
  std::tie(ctx.dict_t1, ctx.dict_t2) = optimization_grids(ph.tissues());
  ctx.expansion.n_timepoints = 96;
  AnnealConfig real;
  real.max_iterations = 40;
  real.steps_per_temp = 10;
  auto const rr = anneal(default_schedule_params(48, 96), make_objective(ctx), real);
  auto const precompute = counters().srf_precompute.load();

  std::ostringstream d;
  d << "monotone " << (monotone ? "yes" : "no") << ", greedy " << (greedy_ok ? "yes" : "no") << ", toy converged "
    << converged << "/20 (worst normalized RMS " << worst << ", max " << longest << " iterations), real run "
    << rr.trace.size() << " iterations with " << precompute << " precompute";
  report(7, "optimizer sanity", monotone && greedy_ok && converged == 20 && longest <= 5000 && !rr.aborted &&
                                  precompute == 1, d.str());
}

} // namespace

auto main() -> int
{
  criterion_1();
  criterion_2();
  criterion_3();
  auto const sampled = sample_both(64, 480);
  criterion_4(sampled);
  criterion_5(sampled);
  criterion_6(sampled);
  criterion_7();
  std::printf("N/A criterion 8 (in vivo results, absolute timings, published optimized sequences): not reproducible at "
              "desk scale\n");
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
