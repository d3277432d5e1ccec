#include "mrf/simulator.hpp"

#include "mrf/instrument.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace mrf {

auto linear_ordering(Index n_interleaves) -> Ordering
{
  if (n_interleaves < 1) { throw std::invalid_argument("ordering needs at least one interleaf"); }
  return [n_interleaves](Index t) { return t % n_interleaves; };
}

namespace {

/// Signals reordered to follow `labels`; throws unless the label sets match one-to-one.
auto align_signals(std::vector<std::string> const &labels, std::vector<TissueSignal> const &signals)
  -> std::vector<TissueSignal const *>
{
  if (signals.size() != labels.size()) {
    throw std::invalid_argument("expected " + std::to_string(labels.size()) + " tissue signals, got " +
                                std::to_string(signals.size()));
  }
  std::vector<TissueSignal const *> out;
  for (auto const &label : labels) {
    auto it = std::find_if(signals.begin(), signals.end(), [&](auto const &s) { return s.label == label; });
    if (it == signals.end()) { throw std::invalid_argument("no signal for tissue '" + label + "'"); }
    out.push_back(&*it);
  }
  auto const n = out.front()->d.size();
  if (n == 0) { throw std::invalid_argument("tissue signals are empty"); }
  for (auto const *s : out) {
    if (s->d.size() != n) { throw std::invalid_argument("tissue signals differ in length"); }
  }
  return out;
}

auto resolve_order(Ordering const &ordering, Index n_interleaves, Index n_timepoints) -> std::vector<Index>
{
  auto const ord = ordering ? ordering : linear_ordering(n_interleaves);
  std::vector<Index> out(static_cast<std::size_t>(n_timepoints));
  for (Index t = 0; t < n_timepoints; ++t) {
    auto const s = ord(t);
    if (s < 0 || s >= n_interleaves) { throw std::invalid_argument("ordering returned an interleaf out of range"); }
    out[static_cast<std::size_t>(t)] = s;
  }
  return out;
}

auto now_ms() -> double
{
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

auto median(std::vector<double> v) -> double
{
  std::sort(v.begin(), v.end());
  auto const n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

namespace {

// acc (interleaved re/im doubles) += psi * w. Spelled out so the compiler vectorizes it; the
// std::complex operator* goes through the NaN-checking libcall.
void axpy(Cx const *psi, Cxd w, double *acc, std::size_t n)
{
  auto const *x = reinterpret_cast<float const *>(psi);
  double const wr = w.real(), wi = w.imag();
  for (std::size_t p = 0; p < n; ++p) {
    double const xr = x[2 * p], xi = x[2 * p + 1];
    acc[2 * p] += xr * wr - xi * wi;
    acc[2 * p + 1] += xr * wi + xi * wr;
  }
}

void store(double const *acc, Cx *dst, std::size_t n)
{
  auto *y = reinterpret_cast<float *>(dst);
  for (std::size_t k = 0; k < 2 * n; ++k) { y[k] = static_cast<float>(acc[k]); }
}

} // namespace

auto simulate_fast(SpatialResponseSet const &srf,
                   std::vector<TissueSignal> const &signals,
                   Ordering const &ordering,
                   Exec exec) -> ImageSeries
{
  srf.validate();
  auto const sig = align_signals(srf.labels, signals);
  auto const nt = static_cast<Index>(sig.front()->d.size());
  auto const nj = srf.tissue_count();
  auto const np = srf.shape.size();

  ImageSeries out;
  out.shape = srf.shape;
  out.method = "fast";
  out.phantom_hash = srf.binding.phantom_hash;
  out.spiral_hash = srf.binding.spiral_hash;
  out.phase_hash = srf.binding.phase_hash;
  out.interleaf_order = resolve_order(ordering, srf.n_interleaves, nt);
  out.frames.assign(static_cast<std::size_t>(nt), CxGrid(srf.shape));

  if (exec == Exec::Serial) {
    for (Index t = 0; t < nt; ++t) {
      auto const s = out.interleaf_order[static_cast<std::size_t>(t)];
      auto &frame = out.frames[static_cast<std::size_t>(t)];
      std::vector<double> acc(2 * static_cast<std::size_t>(np), 0.0);
      for (Index i = 0; i < nj; ++i) {
        axpy(srf.at(i, s).data(), sig[static_cast<std::size_t>(i)]->d[static_cast<std::size_t>(t)], acc.data(),
             static_cast<std::size_t>(np));
      }
      store(acc.data(), frame.data(), static_cast<std::size_t>(np));
    }
    return out;
  }

  // Frames sharing an interleaf reuse the same Psi block while it is in cache.
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(srf.n_interleaves));
  for (Index t = 0; t < nt; ++t) {
    groups[static_cast<std::size_t>(out.interleaf_order[static_cast<std::size_t>(t)])].push_back(t);
  }
  constexpr Index kBlock = 512;
  Index const n_blocks = (np + kBlock - 1) / kBlock;
  Index const n_tasks = srf.n_interleaves * n_blocks;
#pragma omp parallel
  {
    std::vector<double> acc;
#pragma omp for schedule(dynamic, 1)
    for (Index task = 0; task < n_tasks; ++task) {
      Index const s = task / n_blocks;
      Index const p0 = (task % n_blocks) * kBlock;
      Index const p1 = std::min(np, p0 + kBlock);
      auto const &frames = groups[static_cast<std::size_t>(s)];
      if (frames.empty()) { continue; }
      auto const nf = frames.size();
      auto const width = static_cast<std::size_t>(p1 - p0);
      acc.assign(2 * nf * width, 0.0);
      for (Index i = 0; i < nj; ++i) {
        Cx const *psi = srf.at(i, s).data() + p0;
        auto const &d = sig[static_cast<std::size_t>(i)]->d;
        for (std::size_t f = 0; f < nf; ++f) {
          axpy(psi, d[static_cast<std::size_t>(frames[f])], acc.data() + 2 * f * width, width);
        }
      }
      for (std::size_t f = 0; f < nf; ++f) {
        store(acc.data() + 2 * f * width, out.frames[static_cast<std::size_t>(frames[f])].data() + p0, width);
      }
    }
  }
  return out;
}

auto simulate_conventional(TissuePhantom const &phantom,
                           std::vector<TissueSignal> const &signals,
                           SpiralSet const &spiral,
                           PhaseMap const *phase,
                           SrfOptions const &options,
                           Ordering const &ordering) -> ImageSeries
{
  std::vector<std::string> labels;
  for (auto const &t : phantom.tissues()) { labels.push_back(t.label); }
  auto const sig = align_signals(labels, signals);
  SamplingOperator const op(spiral, phantom.shape(), options.dcf_mode, options.nufft);
  std::vector<CxdGrid> weighted;
  for (Index i = 0; i < phantom.tissue_count(); ++i) { weighted.push_back(weighted_mask(phantom.mask(i), phase)); }

  auto const nt = static_cast<Index>(sig.front()->d.size());
  auto const np = phantom.shape().size();
  ImageSeries out;
  out.shape = phantom.shape();
  out.method = "conventional";
  out.phantom_hash = phantom.hash();
  out.spiral_hash = spiral.hash();
  out.phase_hash = phase_hash(phase);
  out.interleaf_order = resolve_order(ordering, spiral.n_interleaves(), nt);
  out.frames.reserve(static_cast<std::size_t>(nt));
  for (Index t = 0; t < nt; ++t) {
    CxdGrid image(phantom.shape());
    for (std::size_t i = 0; i < weighted.size(); ++i) {
      Cxd const d = sig[i]->d[static_cast<std::size_t>(t)];
      if (d == Cxd{0, 0}) { continue; }
      for (Index p = 0; p < np; ++p) { image[p] += weighted[i][p] * d; }
    }
    auto const samples = op.forward_union(image, options.exec);
    auto const recon = options.full_sampling
                         ? op.reconstruct_full(samples, options.exec)
                         : op.reconstruct_interleaf(samples, out.interleaf_order[static_cast<std::size_t>(t)], options.exec);
    CxGrid frame(phantom.shape());
    for (Index p = 0; p < np; ++p) { frame[p] = Cx(recon[p]); }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

auto compose_series(TissuePhantom const &phantom,
                    std::vector<TissueSignal> const &signals,
                    PhaseMap const *phase,
                    std::string method) -> ImageSeries
{
  std::vector<std::string> labels;
  for (auto const &t : phantom.tissues()) { labels.push_back(t.label); }
  auto const sig = align_signals(labels, signals);
  std::vector<CxdGrid> weighted;
  for (Index i = 0; i < phantom.tissue_count(); ++i) { weighted.push_back(weighted_mask(phantom.mask(i), phase)); }
  auto const nt = static_cast<Index>(sig.front()->d.size());
  auto const np = phantom.shape().size();
  ImageSeries out;
  out.shape = phantom.shape();
  out.method = std::move(method);
  out.phantom_hash = phantom.hash();
  out.phase_hash = phase_hash(phase);
  out.frames.assign(static_cast<std::size_t>(nt), CxGrid(phantom.shape()));
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < nt; ++t) {
    auto &frame = out.frames[static_cast<std::size_t>(t)];
    for (Index p = 0; p < np; ++p) {
      Cxd acc{0, 0};
      for (std::size_t i = 0; i < weighted.size(); ++i) { acc += weighted[i][p] * sig[i]->d[static_cast<std::size_t>(t)]; }
      frame[p] = Cx(acc);
    }
  }
  return out;
}

auto simulate_gaussian_model(std::vector<TissueSignal> const &signals, double snr_db, std::uint64_t seed)
  -> std::vector<TissueSignal>
{
  if (signals.empty()) { throw std::invalid_argument("gaussian model needs at least one signal"); }
  if (std::isnan(snr_db)) { throw std::invalid_argument("SNR must not be NaN"); }
  if (std::isinf(snr_db) && snr_db > 0) { return signals; }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto out = signals;
  for (auto &s : out) {
    if (s.d.empty()) { throw std::invalid_argument("signal '" + s.label + "' is empty"); }
    double power = 0;
    for (auto v : s.d) { power += std::norm(v); }
    power /= static_cast<double>(s.d.size());
    if (!(power > 0)) { throw std::invalid_argument("signal '" + s.label + "' has zero power; SNR is undefined"); }
    double const sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0) / 2.0);
    for (auto &v : s.d) {
      double const re = normal(rng);
      double const im = normal(rng);
      v += Cxd{sigma * re, sigma * im};
    }
  }
  return out;
}

auto BenchReport::to_json() const -> Json
{
  return {{"fast_ms", fast_ms},
          {"conventional_ms", conventional_ms},
          {"precompute_ms", precompute_ms},
          {"speedup", speedup},
          {"fast_nufft_calls", fast_nufft_calls},
          {"config", config}};
}

auto benchmark(TissuePhantom const &phantom,
               SpiralSet const &spiral,
               PhaseMap const *phase,
               SequenceSchedule const &schedule,
               SrfOptions const &options,
               Index repetitions) -> BenchReport
{
  if (repetitions < 1) { throw std::invalid_argument("benchmark needs at least one repetition"); }
  BenchReport report;
  double t0 = now_ms();
  auto const srf = compute_spatial_responses(phantom, spiral, phase, options);
  report.precompute_ms = now_ms() - t0;

  std::vector<double> fast, conventional;
  for (Index r = 0; r < repetitions; ++r) {
    auto const before = counters().nufft_total();
    t0 = now_ms();
    auto const sig = simulate_tissue_signals(phantom.tissues(), schedule);
    auto const series = simulate_fast(srf, sig, {}, options.exec);
    fast.push_back(now_ms() - t0);
    report.fast_nufft_calls += counters().nufft_total() - before;

    t0 = now_ms();
    auto const sig2 = simulate_tissue_signals(phantom.tissues(), schedule);
    auto const conv = simulate_conventional(phantom, sig2, spiral, phase, options);
    conventional.push_back(now_ms() - t0);
  }
  report.fast_ms = median(fast);
  report.conventional_ms = median(conventional);
  report.speedup = report.conventional_ms / std::max(report.fast_ms, std::numeric_limits<double>::min());
  report.config = {{"grid", {phantom.shape().rows, phantom.shape().cols}},
                   {"tissues", phantom.tissue_count()},
                   {"n_timepoints", schedule.n_timepoints()},
                   {"n_interleaves", spiral.n_interleaves()},
                   {"union_samples", spiral.n_samples()},
                   {"dcf_mode", dcf_mode_name(options.dcf_mode)},
                   {"phase", phase_hash(phase)},
                   {"nufft",
                    {{"oversampling", options.nufft.oversampling},
                     {"kernel_width", options.nufft.kernel_width},
                     {"table_size", options.nufft.table_size}}},
                   {"threads", omp_get_max_threads()},
                   {"repetitions", repetitions}};
  return report;
}

} // namespace mrf
