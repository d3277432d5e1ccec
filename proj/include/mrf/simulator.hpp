#pragma once

#include "sequence.hpp"
#include "spatial_response.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mrf {

/// Frame t -> interleaf index (0-based).
using Ordering = std::function<Index(Index t)>;

/// Interleaves used in turn and repeated: t mod n_interleaves.
auto linear_ordering(Index n_interleaves) -> Ordering;

struct ImageSeries
{
  Shape2 shape{};
  std::vector<CxGrid> frames;
  std::vector<Index> interleaf_order; // 0-based
  std::string method;                 // fast | conventional | gaussian
  std::string phantom_hash, spiral_hash, phase_hash = "none", schedule_hash;

  auto n_timepoints() const -> Index { return static_cast<Index>(frames.size()); }
};

/// frame t = sum_i Psi_i(., ., ordering(t)) d_i(t). Never runs a Fourier transform.
/// The parallel path groups frames by interleaf so each Psi block is read once per group.
auto simulate_fast(SpatialResponseSet const &srf,
                   std::vector<TissueSignal> const &signals,
                   Ordering const &ordering = {},
                   Exec exec = Exec::Parallel) -> ImageSeries;

/// Per frame: compose sum_i P_i e^{j theta} d_i(t), grid onto the full union, keep interleaf
/// ordering(t), density-weight and reconstruct (or reconstruct from the full union when
/// `options.full_sampling`).
auto simulate_conventional(TissuePhantom const &phantom,
                           std::vector<TissueSignal> const &signals,
                           SpiralSet const &spiral,
                           PhaseMap const *phase,
                           SrfOptions const &options = {},
                           Ordering const &ordering = {}) -> ImageSeries;

/// frame t = sum_i P_i e^{j theta} d_i(t): the image with no sampling at all. Paired with
/// simulate_gaussian_model it gives the noise-only comparison series.
auto compose_series(TissuePhantom const &phantom,
                    std::vector<TissueSignal> const &signals,
                    PhaseMap const *phase,
                    std::string method = "ideal") -> ImageSeries;

/// Infinite snr_db means no noise.
auto simulate_gaussian_model(std::vector<TissueSignal> const &signals, double snr_db, std::uint64_t seed)
  -> std::vector<TissueSignal>;

struct BenchReport
{
  double fast_ms = 0;
  double conventional_ms = 0;
  double precompute_ms = 0;
  double speedup = 0;
  std::uint64_t fast_nufft_calls = 0;
  Json config;

  auto to_json() const -> Json;
};

/// Median wall-clock times over `repetitions`. Both timings include the signal simulation; the
/// fast timing excludes the spatial response precompute, which is reported separately.
auto benchmark(TissuePhantom const &phantom,
               SpiralSet const &spiral,
               PhaseMap const *phase,
               SequenceSchedule const &schedule,
               SrfOptions const &options,
               Index repetitions) -> BenchReport;

} // namespace mrf
