#include "mrf/spatial_response.hpp"

#include "mrf/errors.hpp"
#include "mrf/instrument.hpp"
#include "mrf/tensor_io.hpp"

#include <cmath>

namespace mrf {

auto dcf_mode_name(DcfMode m) -> std::string
{
  return m == DcfMode::Scaled ? "scaled" : "union";
}

auto parse_dcf_mode(std::string const &name) -> DcfMode
{
  if (name == "scaled") { return DcfMode::Scaled; }
  if (name == "union") { return DcfMode::Union; }
  throw std::invalid_argument("unknown dcf mode '" + name + "' (expected scaled or union)");
}

SamplingOperator::SamplingOperator(SpiralSet const &spiral, Shape2 image, DcfMode mode, NufftParams nufft)
  : plan_{spiral.kx, spiral.ky, image, nufft}
  , mode_{mode}
  , n_interleaves_{spiral.n_interleaves()}
  , readout_len_{spiral.readout_len}
  , union_weights_{spiral.dcf}
{
  if (image.rows != spiral.params.matrix_size || image.cols != spiral.params.matrix_size) {
    throw std::invalid_argument("spiral matrix size " + std::to_string(spiral.params.matrix_size) +
                                " does not match image grid " + to_string(image));
  }
  if (static_cast<Index>(spiral.dcf.size()) != spiral.n_samples()) {
    throw std::invalid_argument("spiral set has no density compensation");
  }
  if (n_interleaves_ * readout_len_ != spiral.n_samples()) {
    throw std::invalid_argument("spiral set sample count is not n_interleaves x readout_len");
  }
  interleaf_weights_ = union_weights_;
  if (mode == DcfMode::Scaled) {
    for (auto &w : interleaf_weights_) { w *= static_cast<double>(n_interleaves_); }
  }
}

auto SamplingOperator::forward_union(CxdGrid const &image, Exec exec) const -> std::vector<Cxd>
{
  return plan_.forward(image, exec);
}

auto SamplingOperator::reconstruct_interleaf(std::span<Cxd const> union_samples, Index s, Exec exec) const -> CxdGrid
{
  if (s < 0 || s >= n_interleaves_) { throw std::invalid_argument("interleaf index out of range"); }
  if (static_cast<Index>(union_samples.size()) != plan_.n_samples()) {
    throw std::invalid_argument("sample vector does not cover the interleaf union");
  }
  auto const first = static_cast<std::size_t>(s * readout_len_);
  auto const n = static_cast<std::size_t>(readout_len_);
  return plan_.adjoint_range(static_cast<Index>(first),
                             union_samples.subspan(first, n),
                             std::span<double const>(interleaf_weights_).subspan(first, n),
                             exec);
}

auto SamplingOperator::reconstruct_full(std::span<Cxd const> union_samples, Exec exec) const -> CxdGrid
{
  return plan_.adjoint(union_samples, union_weights_, exec);
}

auto SrfBinding::mismatch(SrfBinding const &o) const -> std::string
{
  if (phantom_hash != o.phantom_hash) { return "phantom_hash"; }
  if (spiral_hash != o.spiral_hash) { return "spiral_hash"; }
  if (phase_hash != o.phase_hash) { return "phase_hash"; }
  if (dcf_mode != o.dcf_mode) { return "dcf_mode"; }
  if (full_sampling != o.full_sampling) { return "full_sampling"; }
  if (nufft.oversampling != o.nufft.oversampling || nufft.kernel_width != o.nufft.kernel_width ||
      nufft.table_size != o.nufft.table_size) {
    return "nufft";
  }
  return {};
}

auto SrfBinding::operator==(SrfBinding const &o) const -> bool
{
  return mismatch(o).empty();
}

void SpatialResponseSet::validate() const
{
  if (n_interleaves < 1) { throw std::invalid_argument("spatial response set: no interleaves"); }
  if (static_cast<Index>(grids.size()) != tissue_count() * n_interleaves) {
    throw std::invalid_argument("spatial response set: expected " + std::to_string(tissue_count() * n_interleaves) +
                                " grids, have " + std::to_string(grids.size()));
  }
  for (auto const &g : grids) {
    if (g.shape() != shape) { throw std::invalid_argument("spatial response set: grid shape mismatch"); }
  }
}

auto binding_for(TissuePhantom const &phantom, SpiralSet const &spiral, PhaseMap const *phase, SrfOptions const &options)
  -> SrfBinding
{
  return {phantom.hash(), spiral.hash(), phase_hash(phase), options.dcf_mode, options.full_sampling, options.nufft};
}

auto weighted_mask(RealGrid const &mask, PhaseMap const *phase) -> CxdGrid
{
  if (phase && phase->grid.shape() != mask.shape()) {
    throw std::invalid_argument("phase map " + to_string(phase->grid.shape()) + " does not match grid " +
                                to_string(mask.shape()));
  }
  CxdGrid out(mask.shape());
  for (Index p = 0; p < mask.size(); ++p) {
    double const m = mask[p];
    out[p] = phase ? std::polar(m, static_cast<double>(phase->grid[p])) : Cxd{m, 0};
  }
  return out;
}

auto compute_spatial_responses(TissuePhantom const &phantom,
                               SpiralSet const &spiral,
                               PhaseMap const *phase,
                               SrfOptions const &options) -> SpatialResponseSet
{
  SamplingOperator const op(spiral, phantom.shape(), options.dcf_mode, options.nufft);
  if (phase && phase->grid.shape() != phantom.shape()) {
    throw std::invalid_argument("phase map does not match phantom grid");
  }
  counters().srf_precompute++;

  SpatialResponseSet set;
  set.shape = phantom.shape();
  set.n_interleaves = spiral.n_interleaves();
  set.binding = binding_for(phantom, spiral, phase, options);
  for (auto const &t : phantom.tissues()) { set.labels.push_back(t.label); }
  set.grids.reserve(static_cast<std::size_t>(phantom.tissue_count() * set.n_interleaves));

  auto to_float = [](CxdGrid const &g) {
    CxGrid out(g.shape());
    for (Index p = 0; p < g.size(); ++p) { out[p] = Cx(g[p]); }
    return out;
  };
  for (Index i = 0; i < phantom.tissue_count(); ++i) {
    auto const samples = op.forward_union(weighted_mask(phantom.mask(i), phase), options.exec);
    if (options.full_sampling) {
      auto const full = to_float(op.reconstruct_full(samples, options.exec));
      for (Index s = 0; s < set.n_interleaves; ++s) { set.grids.push_back(full); }
    } else {
      for (Index s = 0; s < set.n_interleaves; ++s) {
        set.grids.push_back(to_float(op.reconstruct_interleaf(samples, s, options.exec)));
      }
    }
  }
  return set;
}

void save_spatial_responses(SpatialResponseSet const &set, std::string const &path, Json extra_meta)
{
  set.validate();
  std::vector<Cx> data;
  data.reserve(set.grids.size() * static_cast<std::size_t>(set.shape.size()));
  for (auto const &g : set.grids) { data.insert(data.end(), g.span().begin(), g.span().end()); }
  auto const &b = set.binding;
  Json meta = {{"kind", "spatial_responses"},
               {"labels", set.labels},
               {"phantom_hash", b.phantom_hash},
               {"spiral_hash", b.spiral_hash},
               {"phase_hash", b.phase_hash},
               {"dcf_mode", dcf_mode_name(b.dcf_mode)},
               {"full_sampling", b.full_sampling},
               {"nufft",
                {{"oversampling", b.nufft.oversampling},
                 {"kernel_width", b.nufft.kernel_width},
                 {"table_size", b.nufft.table_size}}}};
  write_tensor(path, {set.tissue_count(), set.n_interleaves, set.shape.rows, set.shape.cols}, data, merge_meta(std::move(meta), extra_meta));
}

auto load_spatial_responses(std::string const &path) -> SpatialResponseSet
{
  auto t = read_cx_tensor(path);
  auto const &meta = t.header.meta;
  if (meta.value("kind", "") != "spatial_responses") { throw FormatError(path + ": not a spatial response file"); }
  if (t.header.shape.size() != 4) { throw FormatError(path + ": spatial responses must be [J, S, rows, cols]"); }
  SpatialResponseSet set;
  try {
    set.labels = meta.at("labels").get<std::vector<std::string>>();
    auto &b = set.binding;
    b.phantom_hash = meta.at("phantom_hash").get<std::string>();
    b.spiral_hash = meta.at("spiral_hash").get<std::string>();
    b.phase_hash = meta.at("phase_hash").get<std::string>();
    b.dcf_mode = parse_dcf_mode(meta.at("dcf_mode").get<std::string>());
    b.full_sampling = meta.at("full_sampling").get<bool>();
    auto const &nu = meta.at("nufft");
    b.nufft = {nu.at("oversampling").get<double>(), nu.at("kernel_width").get<Index>(), nu.at("table_size").get<Index>()};
  } catch (Json::exception const &e) {
    throw FormatError(path + ": bad spatial response metadata: " + e.what());
  } catch (std::invalid_argument const &e) {
    throw FormatError(path + ": " + e.what());
  }
  auto const j = t.header.shape[0];
  set.n_interleaves = t.header.shape[1];
  set.shape = {t.header.shape[2], t.header.shape[3]};
  if (static_cast<Index>(set.labels.size()) != j) { throw FormatError(path + ": label count does not match shape"); }
  auto const n = set.shape.size();
  for (Index g = 0; g < j * set.n_interleaves; ++g) {
    auto const first = t.data.begin() + g * n;
    set.grids.emplace_back(set.shape, std::vector<Cx>(first, first + n));
  }
  return set;
}

auto load_spatial_responses(std::string const &path, SrfBinding const &expected) -> SpatialResponseSet
{
  auto set = load_spatial_responses(path);
  if (auto const field = set.binding.mismatch(expected); !field.empty()) {
    throw CacheInvalidError(path + ": stale spatial responses (" + field + " differs from current inputs)");
  }
  return set;
}

} // namespace mrf
