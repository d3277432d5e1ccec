#pragma once

#include "tensor_io.hpp"

#include <array>
#include <numbers>
#include <string>
#include <vector>

namespace mrf {

struct TissueSpec
{
  std::string label;
  double t1_ms = 0;
  double t2_ms = 0;

  /// (0, 0) marks a tissue that produces no signal (skull, dura).
  auto is_void() const -> bool { return t1_ms == 0 && t2_ms == 0; }
  auto operator==(TissueSpec const &) const -> bool = default;
};

/// Segmented phantom: one volume-fraction mask in [0, 1] per tissue.
class TissuePhantom
{
public:
  TissuePhantom(Shape2 shape, std::vector<TissueSpec> tissues, std::vector<RealGrid> masks);

  auto shape() const -> Shape2 { return shape_; }
  auto tissue_count() const -> Index { return static_cast<Index>(tissues_.size()); }
  auto tissues() const -> std::vector<TissueSpec> const & { return tissues_; }
  auto tissue(Index i) const -> TissueSpec const & { return tissues_.at(static_cast<std::size_t>(i)); }
  auto masks() const -> std::vector<RealGrid> const & { return masks_; }
  auto mask(Index i) const -> RealGrid const & { return masks_.at(static_cast<std::size_t>(i)); }
  auto index_of(std::string const &label) const -> Index;

  /// Content hash over tissue specs and mask values.
  auto hash() const -> std::string;

private:
  Shape2 shape_;
  std::vector<TissueSpec> tissues_;
  std::vector<RealGrid> masks_;
};

struct PhaseMap
{
  RealGrid grid;
  std::array<double, 2> direction{1, 0}; // normalized (x = column axis, y = row axis)
  double min = -std::numbers::pi;
  double max = 2 * std::numbers::pi;

  auto hash() const -> std::string;
};

inline constexpr Index kMinPhantomSize = 16;

auto make_three_tissue_phantom(Shape2 shape) -> TissuePhantom;
auto make_eleven_tissue_phantom(Shape2 shape) -> TissuePhantom;

/// Quadratic background phase along `direction`, constant across it:
///   theta = min + (max - min) * u^2, u in [0, 1] the normalized coordinate along direction.
auto synthesize_phase_map(Shape2 shape,
                          std::array<double, 2> direction,
                          double min = -std::numbers::pi,
                          double max = 2 * std::numbers::pi) -> PhaseMap;

/// "+x", "-x", "+y", "-y".
auto canonical_direction(std::string const &name) -> std::array<double, 2>;

/// Hash of an optional phase map; "none" when absent.
auto phase_hash(PhaseMap const *phase) -> std::string;

void save_phantom(TissuePhantom const &phantom, std::string const &path, Json extra_meta = Json::object());
auto load_phantom(std::string const &path) -> TissuePhantom;
void save_phase_map(PhaseMap const &phase, std::string const &path, Json extra_meta = Json::object());
auto load_phase_map(std::string const &path) -> PhaseMap;

} // namespace mrf
