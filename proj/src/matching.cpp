#include "mrf/matching.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace mrf {

namespace {

using CxMatrix = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CxMatrixCol = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic>;

auto result_for(Dictionary const &dict, Index e, double score) -> MatchResult
{
  auto const i = static_cast<std::size_t>(e);
  return {e, dict.t1_ms[i], dict.t2_ms[i], dict.norm_scale[i] > 0 ? score / dict.norm_scale[i] : 0.0, score};
}

} // namespace

auto match_signal(std::span<Cxd const> signal, Dictionary const &dict) -> MatchResult
{
  if (static_cast<Index>(signal.size()) != dict.n_timepoints) {
    throw std::invalid_argument("signal length does not match dictionary");
  }
  double norm = 0;
  for (auto v : signal) { norm += std::norm(v); }
  if (!(norm > 0)) { return {}; }
  Index best = -1;
  double best_score = -1;
  for (Index e = 0; e < dict.entry_count(); ++e) {
    auto const d = dict.signal(e);
    Cxd acc{0, 0};
    for (std::size_t t = 0; t < signal.size(); ++t) { acc += std::conj(Cxd(d[t])) * signal[t]; }
    double const score = std::abs(acc);
    if (score > best_score) {
      best_score = score;
      best = e;
    }
  }
  return result_for(dict, best, best_score);
}

auto match_series(ImageSeries const &series, Dictionary const &dict, MatchOptions const &options) -> QuantMaps
{
  auto const nt = series.n_timepoints();
  if (nt != dict.n_timepoints) {
    throw std::invalid_argument("series has " + std::to_string(nt) + " frames but dictionary has " +
                                std::to_string(dict.n_timepoints) + " timepoints");
  }
  if (!series.schedule_hash.empty() && !dict.schedule_hash.empty() && series.schedule_hash != dict.schedule_hash) {
    throw std::invalid_argument("series and dictionary were simulated with different schedules");
  }
  if (dict.entry_count() < 1) { throw std::invalid_argument("dictionary is empty"); }
  auto const shape = series.shape;
  auto const np = shape.size();
  QuantMaps maps{RealGrid(shape), RealGrid(shape), RealGrid(shape), Grid2<std::uint8_t>(shape)};

  std::vector<double> norms(static_cast<std::size_t>(np));
  for (auto const &f : series.frames) {
    if (f.shape() != shape) { throw std::invalid_argument("series frames differ in shape"); }
    for (Index p = 0; p < np; ++p) { norms[static_cast<std::size_t>(p)] += std::norm(Cxd(f[p])); }
  }
  double max_norm = 0;
  for (auto &n : norms) {
    n = std::sqrt(n);
    max_norm = std::max(max_norm, n);
  }
  double const cutoff = options.skip_threshold * max_norm;
  std::vector<Index> pixels;
  for (Index p = 0; p < np; ++p) {
    if (norms[static_cast<std::size_t>(p)] > 0 && !(norms[static_cast<std::size_t>(p)] < cutoff)) { pixels.push_back(p); }
  }

  auto store = [&](Index p, MatchResult const &r) {
    maps.t1[p] = static_cast<float>(r.t1_ms);
    maps.t2[p] = static_cast<float>(r.t2_ms);
    maps.m0[p] = static_cast<float>(r.m0);
    maps.match_mask[p] = 1;
  };

  auto const n_pix = static_cast<Index>(pixels.size());
  if (options.exec == Exec::Serial) {
    std::vector<Cxd> sig(static_cast<std::size_t>(nt));
    for (auto p : pixels) {
      for (Index t = 0; t < nt; ++t) { sig[static_cast<std::size_t>(t)] = Cxd(series.frames[static_cast<std::size_t>(t)][p]); }
      store(p, match_signal(sig, dict));
    }
    return maps;
  }

  auto const n_entries = dict.entry_count();
  Eigen::Map<CxMatrix const> const d(dict.signals.data(), n_entries, nt);
  constexpr Index kChunk = 256;
  Index const n_chunks = (n_pix + kChunk - 1) / kChunk;
#pragma omp parallel
  {
    CxMatrixCol x, scores;
#pragma omp for schedule(dynamic, 1)
    for (Index c = 0; c < n_chunks; ++c) {
      Index const first = c * kChunk;
      Index const count = std::min(kChunk, n_pix - first);
      x.resize(nt, count);
      for (Index t = 0; t < nt; ++t) {
        auto const &frame = series.frames[static_cast<std::size_t>(t)];
        for (Index k = 0; k < count; ++k) { x(t, k) = frame[pixels[static_cast<std::size_t>(first + k)]]; }
      }
      scores.noalias() = d.conjugate() * x;
      for (Index k = 0; k < count; ++k) {
        Index best = 0;
        float best_score = -1;
        for (Index e = 0; e < n_entries; ++e) {
          float const s = std::abs(scores(e, k));
          if (s > best_score) {
            best_score = s;
            best = e;
          }
        }
        store(pixels[static_cast<std::size_t>(first + k)], result_for(dict, best, best_score));
      }
    }
  }
  return maps;
}

} // namespace mrf
