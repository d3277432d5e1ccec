#include "mrf/phantom.hpp"

#include "mrf/errors.hpp"
#include "mrf/hash.hpp"
#include "mrf/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mrf {

TissuePhantom::TissuePhantom(Shape2 shape, std::vector<TissueSpec> tissues, std::vector<RealGrid> masks)
  : shape_{shape}
  , tissues_{std::move(tissues)}
  , masks_{std::move(masks)}
{
  if (tissues_.empty()) { throw std::invalid_argument("phantom needs at least one tissue"); }
  if (tissues_.size() != masks_.size()) { throw std::invalid_argument("phantom: tissue and mask counts differ"); }
  std::set<std::string> labels;
  for (auto const &t : tissues_) {
    if (t.label.empty()) { throw std::invalid_argument("phantom: empty tissue label"); }
    if (!labels.insert(t.label).second) { throw std::invalid_argument("phantom: duplicate tissue label " + t.label); }
    if (!(t.t1_ms >= 0) || !(t.t2_ms >= 0)) { throw std::invalid_argument("phantom: negative relaxation time for " + t.label); }
    if (t.t1_ms > 0 && t.t2_ms > 0 && t.t2_ms > t.t1_ms) {
      throw std::invalid_argument("phantom: T2 > T1 for " + t.label);
    }
    if ((t.t1_ms == 0) != (t.t2_ms == 0)) {
      throw std::invalid_argument("phantom: " + t.label + " has exactly one zero relaxation time");
    }
  }
  for (auto const &m : masks_) {
    if (m.shape() != shape_) { throw std::invalid_argument("phantom: mask shape differs from " + to_string(shape_)); }
    for (float v : m.span()) {
      if (!(v >= 0.f && v <= 1.f)) { throw std::invalid_argument("phantom: mask value outside [0, 1]"); }
    }
  }
}

auto TissuePhantom::index_of(std::string const &label) const -> Index
{
  for (std::size_t i = 0; i < tissues_.size(); ++i) {
    if (tissues_[i].label == label) { return static_cast<Index>(i); }
  }
  return -1;
}

auto TissuePhantom::hash() const -> std::string
{
  Hasher h;
  h.text("phantom").value(shape_.rows).value(shape_.cols);
  for (std::size_t i = 0; i < tissues_.size(); ++i) {
    h.text(tissues_[i].label).value(tissues_[i].t1_ms).value(tissues_[i].t2_ms);
    h.values(masks_[i].span());
  }
  return h.hex();
}

auto PhaseMap::hash() const -> std::string
{
  return Hasher{}.text("phase").value(grid.rows()).value(grid.cols()).values(grid.span()).hex();
}

auto phase_hash(PhaseMap const *phase) -> std::string { return phase ? phase->hash() : "none"; }

namespace {

enum Brain : int
{
  kNone = -1,
  kWM = 0,
  kGM = 1,
  kCSF = 2,
  kBlood = 3,
  kFat = 4,
  kFatSurround = 5,
  kMarrow = 6,
  kMuscle = 7,
  kSkin = 8,
  kSkull = 9,
  kDura = 10,
};

auto inside_ellipse(double u, double v, double cu, double cv, double au, double av) -> bool
{
  double const du = (u - cu) / au, dv = (v - cv) / av;
  return du * du + dv * dv <= 1.0;
}

// (u, v) normalized so that the brain boundary is the unit circle.
auto brain_label(double u, double v, bool vessels) -> int
{
  double const rho = std::hypot(u, v);
  if (rho > 1.0) { return kNone; }
  if (vessels) {
    if (inside_ellipse(u, v, 0.0, -0.965, 0.05, 0.035) || inside_ellipse(u, v, 0.0, 0.55, 0.05, 0.05) ||
        inside_ellipse(u, v, -0.45, 0.30, 0.035, 0.035) || inside_ellipse(u, v, 0.40, -0.40, 0.035, 0.035)) {
      return kBlood;
    }
  }
  if (rho > 0.93) { return kCSF; }
  double const phi = std::atan2(v, u);
  if (rho * (1.0 + 0.035 * std::cos(9.0 * phi)) > 0.72) { return kGM; }
  if (inside_ellipse(u, v, -0.17, -0.05, 0.11, 0.27) || inside_ellipse(u, v, 0.17, -0.05, 0.11, 0.27)) { return kCSF; }
  return kWM;
}

constexpr double kHeadA = 0.90, kHeadB = 0.96, kBrainScale = 0.785;

auto head_label(double xn, double yn) -> int
{
  double const rho = std::hypot(xn / kHeadA, yn / kHeadB);
  if (rho > 1.0) { return kNone; }
  if (rho <= kBrainScale) { return brain_label(xn / (kHeadA * kBrainScale), yn / (kHeadB * kBrainScale), true); }
  if (rho > 0.965) { return kSkin; }
  if (rho > 0.935) { return kFat; }
  if (rho > 0.905) { return kFatSurround; }
  if (rho > 0.875) {
    double const phi = std::atan2(yn / kHeadB, xn / kHeadA);
    return std::abs(std::cos(phi)) > 0.55 ? kMuscle : kFatSurround;
  }
  if (rho > 0.855) { return kSkull; }
  if (rho > 0.825) { return kMarrow; }
  if (rho > 0.805) { return kSkull; }
  return kDura;
}

void check_size(Shape2 shape)
{
  if (shape.rows < kMinPhantomSize || shape.cols < kMinPhantomSize) {
    throw std::invalid_argument("phantom grid must be at least 16x16, got " + to_string(shape));
  }
}

auto normalized(Index i, Index n, double offset) -> double
{
  return (static_cast<double>(i) + 0.5 + offset - 0.5 * static_cast<double>(n)) / (0.5 * static_cast<double>(n));
}

} // namespace

auto make_three_tissue_phantom(Shape2 shape) -> TissuePhantom
{
  check_size(shape);
  std::vector<TissueSpec> tissues{{"wm", 800, 40}, {"gm", 1400, 60}, {"csf", 3000, 500}};
  std::vector<RealGrid> masks(3, RealGrid(shape, 0.f));
  for (Index r = 0; r < shape.rows; ++r) {
    for (Index c = 0; c < shape.cols; ++c) {
      int const label = brain_label(normalized(c, shape.cols, 0) / 0.80, normalized(r, shape.rows, 0) / 0.92, false);
      if (label != kNone) { masks[static_cast<std::size_t>(label)](r, c) = 1.f; }
    }
  }
  return TissuePhantom(shape, std::move(tissues), std::move(masks));
}

auto make_eleven_tissue_phantom(Shape2 shape) -> TissuePhantom
{
  check_size(shape);
  std::vector<TissueSpec> tissues{
    {"wm", 800, 40},
    {"gm", 1400, 60},
    {"csf", 3000, 500},
    {"blood", 1600, 100},
    {"fat", 360, 70},
    {"fat_surround", 500, 70},
    {"marrow", 500, 70},
    {"muscle", 800, 48},
    {"skin", 560, 320},
    {"skull", 0, 0},
    {"dura", 0, 0},
  };
  // Partial volume from 4x4 supersampling; fractions are exact multiples of 1/16.
  constexpr int kSub = 4;
  std::vector<RealGrid> masks(tissues.size(), RealGrid(shape, 0.f));
  std::array<int, 11> hits{};
  for (Index r = 0; r < shape.rows; ++r) {
    for (Index c = 0; c < shape.cols; ++c) {
      hits.fill(0);
      for (int sr = 0; sr < kSub; ++sr) {
        for (int sc = 0; sc < kSub; ++sc) {
          double const orow = (sr + 0.5) / kSub - 0.5, ocol = (sc + 0.5) / kSub - 0.5;
          int const label = head_label(normalized(c, shape.cols, ocol), normalized(r, shape.rows, orow));
          if (label != kNone) { ++hits[static_cast<std::size_t>(label)]; }
        }
      }
      for (std::size_t i = 0; i < hits.size(); ++i) {
        masks[i](r, c) = static_cast<float>(hits[i]) / (kSub * kSub);
      }
    }
  }
  return TissuePhantom(shape, std::move(tissues), std::move(masks));
}

auto synthesize_phase_map(Shape2 shape, std::array<double, 2> direction, double min, double max) -> PhaseMap
{
  double const norm = std::hypot(direction[0], direction[1]);
  if (!(norm > 0) || !std::isfinite(norm)) { throw std::invalid_argument("phase map direction must be a nonzero vector"); }
  if (shape.rows <= 0 || shape.cols <= 0) { throw std::invalid_argument("phase map needs a nonempty grid"); }
  if (!(max >= min)) { throw std::invalid_argument("phase map range must satisfy min <= max"); }
  double const dx = direction[0] / norm, dy = direction[1] / norm;
  double const cx = 0.5 * static_cast<double>(shape.cols - 1), cy = 0.5 * static_cast<double>(shape.rows - 1);
  auto project = [&](double x, double y) { return dx * x + dy * y; };
  double pmin = project(-cx, -cy), pmax = pmin;
  for (double x : {-cx, cx}) {
    for (double y : {-cy, cy}) {
      pmin = std::min(pmin, project(x, y));
      pmax = std::max(pmax, project(x, y));
    }
  }
  PhaseMap map{RealGrid(shape), {dx, dy}, min, max};
  for (Index r = 0; r < shape.rows; ++r) {
    for (Index c = 0; c < shape.cols; ++c) {
      double const p = project(static_cast<double>(c) - cx, static_cast<double>(r) - cy);
      double const u = pmax > pmin ? std::clamp((p - pmin) / (pmax - pmin), 0.0, 1.0) : 0.0;
      map.grid(r, c) = static_cast<float>(min + (max - min) * u * u);
    }
  }
  return map;
}

auto canonical_direction(std::string const &name) -> std::array<double, 2>
{
  if (name == "+x" || name == "x") { return {1, 0}; }
  if (name == "-x") { return {-1, 0}; }
  if (name == "+y" || name == "y") { return {0, 1}; }
  if (name == "-y") { return {0, -1}; }
  throw std::invalid_argument("unknown phase direction '" + name + "' (expected +x, -x, +y or -y)");
}

void save_phantom(TissuePhantom const &phantom, std::string const &path, Json extra_meta)
{
  auto const shape = phantom.shape();
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(phantom.tissue_count() * shape.size()));
  Json tissues = Json::array();
  for (Index i = 0; i < phantom.tissue_count(); ++i) {
    auto const &t = phantom.tissue(i);
    tissues.push_back({{"label", t.label}, {"t1_ms", t.t1_ms}, {"t2_ms", t.t2_ms}});
    auto const m = phantom.mask(i).span();
    data.insert(data.end(), m.begin(), m.end());
  }
  Json meta = {{"kind", "phantom"}, {"tissues", tissues}, {"phantom_hash", phantom.hash()}};
  write_tensor(path, {phantom.tissue_count(), shape.rows, shape.cols}, data, merge_meta(std::move(meta), extra_meta));
}

auto load_phantom(std::string const &path) -> TissuePhantom
{
  auto t = read_real_tensor(path);
  auto const &meta = t.header.meta;
  if (meta.value("kind", "") != "phantom") { throw FormatError(path + ": not a phantom file"); }
  if (t.header.shape.size() != 3) { throw FormatError(path + ": phantom tensor must be [J, rows, cols]"); }
  if (!meta.contains("tissues") || !meta["tissues"].is_array()) { throw FormatError(path + ": missing tissues"); }
  auto const j = t.header.shape[0];
  Shape2 const shape{t.header.shape[1], t.header.shape[2]};
  if (static_cast<Index>(meta["tissues"].size()) != j) { throw FormatError(path + ": tissue count does not match shape"); }
  std::vector<TissueSpec> tissues;
  for (auto const &rec : meta["tissues"]) {
    for (char const *field : {"label", "t1_ms", "t2_ms"}) {
      if (!rec.contains(field)) { throw FormatError(path + ": tissue record missing field " + field); }
    }
    if (!rec["label"].is_string() || !rec["t1_ms"].is_number() || !rec["t2_ms"].is_number()) {
      throw FormatError(path + ": tissue record has wrong field types");
    }
    tissues.push_back({rec["label"].get<std::string>(), rec["t1_ms"].get<double>(), rec["t2_ms"].get<double>()});
  }
  std::vector<RealGrid> masks;
  for (Index i = 0; i < j; ++i) {
    auto const first = t.data.begin() + i * shape.size();
    masks.emplace_back(shape, std::vector<float>(first, first + shape.size()));
  }
  try {
    TissuePhantom phantom(shape, std::move(tissues), std::move(masks));
    if (meta.contains("phantom_hash") && meta["phantom_hash"] != phantom.hash()) {
      throw FormatError(path + ": phantom_hash does not match content");
    }
    return phantom;
  } catch (std::invalid_argument const &e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_phase_map(PhaseMap const &phase, std::string const &path, Json extra_meta)
{
  Json meta = {{"kind", "phase_map"},
               {"direction", {phase.direction[0], phase.direction[1]}},
               {"range", {phase.min, phase.max}},
               {"phase_hash", phase.hash()}};
  write_tensor(path, {phase.grid.rows(), phase.grid.cols()}, phase.grid.span(), merge_meta(std::move(meta), extra_meta));
}

auto load_phase_map(std::string const &path) -> PhaseMap
{
  auto t = read_real_tensor(path);
  auto const &meta = t.header.meta;
  if (meta.value("kind", "") != "phase_map" || t.header.shape.size() != 2) { throw FormatError(path + ": not a phase map"); }
  if (!meta.contains("direction") || !meta.contains("range")) { throw FormatError(path + ": phase map missing direction/range"); }
  PhaseMap map;
  map.grid = RealGrid({t.header.shape[0], t.header.shape[1]}, std::move(t.data));
  map.direction = {meta["direction"].at(0).get<double>(), meta["direction"].at(1).get<double>()};
  map.min = meta["range"].at(0).get<double>();
  map.max = meta["range"].at(1).get<double>();
  for (float v : map.grid.span()) {
    if (!(v >= map.min - 1e-5 && v <= map.max + 1e-5)) { throw FormatError(path + ": phase value outside declared range"); }
  }
  return map;
}

} // namespace mrf
