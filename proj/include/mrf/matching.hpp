#pragma once

#include "sequence.hpp"
#include "simulator.hpp"

#include <cstdint>

namespace mrf {

struct MatchOptions
{
  /// Pixels whose L2 norm is below this fraction of the largest pixel norm are left unmatched.
  double skip_threshold = 1e-3;
  Exec exec = Exec::Parallel;
};

struct MatchResult
{
  Index entry = -1; // -1 when skipped
  double t1_ms = 0;
  double t2_ms = 0;
  double m0 = 0;
  double score = 0; // |<entry, signal>|
  auto matched() const -> bool { return entry >= 0; }
};

struct QuantMaps
{
  RealGrid t1, t2, m0;
  Grid2<std::uint8_t> match_mask;
};

/// argmax_e |<d_e, s>| over unit-norm entries, lowest index on ties. A zero signal is skipped.
auto match_signal(std::span<Cxd const> signal, Dictionary const &dict) -> MatchResult;

/// Per-pixel match of a series. Throws std::invalid_argument if the series length or its
/// schedule hash (when recorded) disagree with the dictionary.
auto match_series(ImageSeries const &series, Dictionary const &dict, MatchOptions const &options = {}) -> QuantMaps;

} // namespace mrf
