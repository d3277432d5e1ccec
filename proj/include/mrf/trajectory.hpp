#pragma once

#include "tensor_io.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mrf {

/// Archimedean variable-density spiral. The union of all interleaves has a radial
/// line spacing of g(r) = pitch(r) / matrix_size cycles/pixel, with
///   pitch(r) = pitch_inner + (pitch_outer - pitch_inner) * (r / 0.5)^gamma
/// in Nyquist units (1.0 = exactly Nyquist). Samples are equispaced in angle;
/// `readout_spacing` is the along-readout step at the k-space edge, also in Nyquist units.
struct SpiralParams
{
  Index matrix_size = 256;
  Index n_interleaves = 48;
  double gamma = 1.0;
  double pitch_inner = 0.5;
  double pitch_outer = 1.0;
  double readout_spacing = 0.5;
};

struct SpiralSet
{
  SpiralParams params;
  Index readout_len = 0;
  double angle_step = 0; // radians between consecutive samples of one interleaf
  /// Union of all interleaves, interleaf-major: sample m of interleaf s lives at s * readout_len + m.
  std::vector<double> kx, ky;
  /// Density compensation per union sample (k-space area, cycles^2/pixel^2). Empty until computed.
  std::vector<double> dcf;

  auto n_interleaves() const -> Index { return params.n_interleaves; }
  auto n_samples() const -> Index { return static_cast<Index>(kx.size()); }
  /// [first, first + readout_len) is the sample range of interleaf `s`.
  auto interleaf_first(Index s) const -> Index { return s * readout_len; }
  /// Hash over the float-rounded coordinates and weights (the precision they are stored at).
  auto hash() const -> std::string;
};

/// Union line spacing g(r) in cycles/pixel.
auto union_line_spacing(SpiralParams const &p, double r) -> double;

/// Builds the base interleaf by integrating dr/dtheta = n_interleaves * g(r) / (2 pi) and rotates
/// it by 2 pi s / n_interleaves for every other interleaf. The result has dcf filled.
auto generate_spiral_set(SpiralParams const &params) -> SpiralSet;

/// Area-based weights: the n_interleaves samples sharing index m jointly tile the annulus
/// between the radii midway to their neighbours, so each gets 1/n_interleaves of its area.
/// Coincident samples (the shared k = 0 start) therefore split one cell instead of dividing by zero.
auto compute_density_compensation(SpiralSet set) -> SpiralSet;

void save_spiral_set(SpiralSet const &set, std::string const &path, Json extra_meta = Json::object());
auto load_spiral_set(std::string const &path) -> SpiralSet;

} // namespace mrf
