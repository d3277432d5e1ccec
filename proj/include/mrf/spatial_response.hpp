#pragma once

#include "nufft.hpp"
#include "phantom.hpp"
#include "trajectory.hpp"

#include <string>
#include <vector>

namespace mrf {

/// Weights used when reconstructing from a single interleaf.
/// Scaled: union dcf times n_interleaves (single-shot convention). Union: the union dcf unchanged.
enum class DcfMode { Scaled, Union };

auto dcf_mode_name(DcfMode m) -> std::string;
auto parse_dcf_mode(std::string const &name) -> DcfMode;

/// F_us^-1 K F_full for one spiral set: forward gridding onto the full interleaf union, selection of
/// one interleaf's samples, density weighting and adjoint gridding. Shared by the precompute and the
/// conventional simulator so both use identical operator settings.
class SamplingOperator
{
public:
  SamplingOperator(SpiralSet const &spiral, Shape2 image, DcfMode mode, NufftParams nufft = {});

  auto image_shape() const -> Shape2 { return plan_.image_shape(); }
  auto n_interleaves() const -> Index { return n_interleaves_; }
  auto dcf_mode() const -> DcfMode { return mode_; }
  auto plan() const -> GriddingPlan const & { return plan_; }

  auto forward_union(CxdGrid const &image, Exec exec = Exec::Parallel) const -> std::vector<Cxd>;
  /// Reconstruction from interleaf `s` of a full-union sample vector.
  auto reconstruct_interleaf(std::span<Cxd const> union_samples, Index s, Exec exec = Exec::Parallel) const -> CxdGrid;
  /// Reconstruction from every union sample with the union dcf (no undersampling).
  auto reconstruct_full(std::span<Cxd const> union_samples, Exec exec = Exec::Parallel) const -> CxdGrid;

private:
  GriddingPlan plan_;
  DcfMode mode_;
  Index n_interleaves_;
  Index readout_len_;
  std::vector<double> union_weights_;
  std::vector<double> interleaf_weights_;
};

struct SrfOptions
{
  DcfMode dcf_mode = DcfMode::Scaled;
  /// Replace K by the identity: every interleaf slot holds the fully sampled reconstruction.
  bool full_sampling = false;
  NufftParams nufft{};
  Exec exec = Exec::Parallel;
};

/// Identifies the exact inputs a spatial response set was derived from.
struct SrfBinding
{
  std::string phantom_hash;
  std::string spiral_hash;
  std::string phase_hash = "none";
  DcfMode dcf_mode = DcfMode::Scaled;
  bool full_sampling = false;
  NufftParams nufft{};

  auto operator==(SrfBinding const &o) const -> bool;
  /// First differing field, or empty when equal.
  auto mismatch(SrfBinding const &o) const -> std::string;
};

struct SpatialResponseSet
{
  Shape2 shape{};
  Index n_interleaves = 0;
  std::vector<std::string> labels;
  /// Tissue-major: grid of tissue i, interleaf s at i * n_interleaves + s.
  std::vector<CxGrid> grids;
  SrfBinding binding;

  auto tissue_count() const -> Index { return static_cast<Index>(labels.size()); }
  auto at(Index tissue, Index interleaf) const -> CxGrid const &
  {
    return grids.at(static_cast<std::size_t>(tissue * n_interleaves + interleaf));
  }
  /// Throws std::invalid_argument if cardinality or grid shapes are inconsistent.
  void validate() const;
};

auto binding_for(TissuePhantom const &phantom,
                 SpiralSet const &spiral,
                 PhaseMap const *phase,
                 SrfOptions const &options) -> SrfBinding;

/// Psi_i(., ., s) = F_us^-1 K_s F_full (P_i e^{j theta}) for every tissue i and interleaf s.
auto compute_spatial_responses(TissuePhantom const &phantom,
                               SpiralSet const &spiral,
                               PhaseMap const *phase,
                               SrfOptions const &options = {}) -> SpatialResponseSet;

/// P_i(x, y) e^{j theta(x, y)} (no phase factor when `phase` is null).
auto weighted_mask(RealGrid const &mask, PhaseMap const *phase) -> CxdGrid;

void save_spatial_responses(SpatialResponseSet const &set, std::string const &path, Json extra_meta = Json::object());
auto load_spatial_responses(std::string const &path) -> SpatialResponseSet;
/// Strict load: throws CacheInvalidError unless the stored binding equals `expected`.
auto load_spatial_responses(std::string const &path, SrfBinding const &expected) -> SpatialResponseSet;

} // namespace mrf
