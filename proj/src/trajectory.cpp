#include "mrf/trajectory.hpp"

#include "mrf/errors.hpp"
#include "mrf/hash.hpp"
#include "mrf/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mrf {

namespace {

constexpr double kEdge = 0.5;

void validate(SpiralParams const &p)
{
  if (p.n_interleaves < 1) { throw std::invalid_argument("spiral: n_interleaves must be >= 1"); }
  if (p.matrix_size < 16) { throw std::invalid_argument("spiral: matrix_size must be >= 16"); }
  if (!(p.gamma > 0)) { throw std::invalid_argument("spiral: gamma must be positive"); }
  if (!(p.readout_spacing > 0) || p.readout_spacing > 1.0) {
    throw InfeasibleTrajectoryError("spiral: readout_spacing must lie in (0, 1] Nyquist units");
  }
  if (!(p.pitch_inner > 0) || !(p.pitch_outer > 0)) { throw std::invalid_argument("spiral: pitches must be positive"); }
  // pitch(r) is monotone in r, so its maximum sits at an endpoint.
  if (p.pitch_inner > 1.0 || p.pitch_outer > 1.0) {
    throw InfeasibleTrajectoryError("spiral: density profile leaves radial gaps wider than Nyquist (pitch > 1)");
  }
}

auto drdtheta(SpiralParams const &p, double r) -> double
{
  return static_cast<double>(p.n_interleaves) * union_line_spacing(p, r) / (2 * std::numbers::pi);
}

auto rk4_step(SpiralParams const &p, double r, double h) -> double
{
  double const k1 = drdtheta(p, r);
  double const k2 = drdtheta(p, r + 0.5 * h * k1);
  double const k3 = drdtheta(p, r + 0.5 * h * k2);
  double const k4 = drdtheta(p, r + h * k3);
  return r + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

} // namespace

auto union_line_spacing(SpiralParams const &p, double r) -> double
{
  double const x = std::clamp(r / kEdge, 0.0, 1.0);
  double const pitch = p.pitch_inner + (p.pitch_outer - p.pitch_inner) * std::pow(x, p.gamma);
  return pitch / static_cast<double>(p.matrix_size);
}

auto generate_spiral_set(SpiralParams const &params) -> SpiralSet
{
  validate(params);
  SpiralSet set;
  set.params = params;

  // Angular step so that the along-readout spacing at the edge equals readout_spacing / matrix_size.
  double const vr = drdtheta(params, kEdge);
  double const speed_edge = std::sqrt(kEdge * kEdge + vr * vr);
  set.angle_step = params.readout_spacing / (static_cast<double>(params.matrix_size) * speed_edge);

  constexpr int kSub = 16;
  std::vector<double> radius{0.0};
  double r = 0.0;
  while (true) {
    double next = r;
    for (int i = 0; i < kSub; ++i) { next = rk4_step(params, next, set.angle_step / kSub); }
    if (next > kEdge) { break; }
    r = next;
    radius.push_back(r);
  }
  set.readout_len = static_cast<Index>(radius.size());

  auto const n = params.n_interleaves;
  set.kx.resize(static_cast<std::size_t>(n * set.readout_len));
  set.ky.resize(set.kx.size());
  for (Index s = 0; s < n; ++s) {
    double const rot = 2 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(n);
    double const c = std::cos(rot), sn = std::sin(rot);
    for (Index m = 0; m < set.readout_len; ++m) {
      double const theta = static_cast<double>(m) * set.angle_step;
      double const bx = radius[static_cast<std::size_t>(m)] * std::cos(theta);
      double const by = radius[static_cast<std::size_t>(m)] * std::sin(theta);
      auto const idx = static_cast<std::size_t>(s * set.readout_len + m);
      // Rounded to the stored precision so a saved and reloaded set is identical.
      set.kx[idx] = static_cast<float>(c * bx - sn * by);
      set.ky[idx] = static_cast<float>(sn * bx + c * by);
    }
  }
  return compute_density_compensation(std::move(set));
}

auto compute_density_compensation(SpiralSet set) -> SpiralSet
{
  auto const n = set.params.n_interleaves;
  auto const len = set.readout_len;
  if (len < 2 || set.n_samples() != n * len) { throw std::invalid_argument("dcf: spiral set has no usable samples"); }

  std::vector<double> r(static_cast<std::size_t>(len));
  for (Index m = 0; m < len; ++m) { r[static_cast<std::size_t>(m)] = std::hypot(set.kx[static_cast<std::size_t>(m)], set.ky[static_cast<std::size_t>(m)]); }
  for (Index m = 1; m < len; ++m) {
    if (r[static_cast<std::size_t>(m)] < r[static_cast<std::size_t>(m - 1)]) {
      throw std::invalid_argument("dcf: interleaf radius must be non-decreasing along the readout");
    }
  }

  std::vector<double> w(static_cast<std::size_t>(len));
  for (Index m = 0; m < len; ++m) {
    auto const i = static_cast<std::size_t>(m);
    double const lo = m == 0 ? 0.0 : 0.5 * (r[i - 1] + r[i]);
    double const hi = m + 1 < len ? 0.5 * (r[i] + r[i + 1]) : r[i] + 0.5 * (r[i] - r[i - 1]);
    w[i] = static_cast<float>(std::numbers::pi * (hi * hi - lo * lo) / static_cast<double>(n));
  }
  set.dcf.resize(set.kx.size());
  for (Index s = 0; s < n; ++s) {
    std::copy(w.begin(), w.end(), set.dcf.begin() + s * len);
  }
  return set;
}

auto SpiralSet::hash() const -> std::string
{
  Hasher h;
  h.text("spiral").value(params.matrix_size).value(params.n_interleaves).value(readout_len);
  auto add = [&h](std::vector<double> const &v) {
    h.value(static_cast<std::uint64_t>(v.size()));
    for (double x : v) { h.value(static_cast<float>(x)); }
  };
  add(kx);
  add(ky);
  add(dcf);
  return h.hex();
}

void save_spiral_set(SpiralSet const &set, std::string const &path, Json extra_meta)
{
  std::vector<float> data;
  data.reserve(set.kx.size() * 3);
  for (std::size_t i = 0; i < set.kx.size(); ++i) {
    data.push_back(static_cast<float>(set.kx[i]));
    data.push_back(static_cast<float>(set.ky[i]));
    data.push_back(set.dcf.empty() ? 0.f : static_cast<float>(set.dcf[i]));
  }
  auto const &p = set.params;
  Json meta = {{"kind", "spiral"},
               {"matrix_size", p.matrix_size},
               {"n_interleaves", p.n_interleaves},
               {"gamma", p.gamma},
               {"pitch_inner", p.pitch_inner},
               {"pitch_outer", p.pitch_outer},
               {"readout_spacing", p.readout_spacing},
               {"angle_step", set.angle_step},
               {"spiral_hash", set.hash()}};
  write_tensor(path, {p.n_interleaves, set.readout_len, 3}, data, merge_meta(std::move(meta), extra_meta));
}

auto load_spiral_set(std::string const &path) -> SpiralSet
{
  auto t = read_real_tensor(path);
  auto const &meta = t.header.meta;
  if (meta.value("kind", "") != "spiral" || t.header.shape.size() != 3 || t.header.shape[2] != 3) {
    throw FormatError(path + ": not a spiral file");
  }
  SpiralSet set;
  try {
    set.params.matrix_size = meta.at("matrix_size").get<Index>();
    set.params.n_interleaves = meta.at("n_interleaves").get<Index>();
    set.params.gamma = meta.at("gamma").get<double>();
    set.params.pitch_inner = meta.at("pitch_inner").get<double>();
    set.params.pitch_outer = meta.at("pitch_outer").get<double>();
    set.params.readout_spacing = meta.at("readout_spacing").get<double>();
    set.angle_step = meta.at("angle_step").get<double>();
  } catch (Json::exception const &e) {
    throw FormatError(path + ": " + e.what());
  }
  if (set.params.n_interleaves != t.header.shape[0]) { throw FormatError(path + ": interleaf count mismatch"); }
  set.readout_len = t.header.shape[1];
  auto const count = static_cast<std::size_t>(t.header.shape[0] * t.header.shape[1]);
  set.kx.resize(count);
  set.ky.resize(count);
  set.dcf.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    set.kx[i] = t.data[3 * i];
    set.ky[i] = t.data[3 * i + 1];
    set.dcf[i] = t.data[3 * i + 2];
    if (!(std::hypot(set.kx[i], set.ky[i]) <= 0.5 + 1e-6) || !(set.dcf[i] > 0)) {
      throw FormatError(path + ": sample outside |k| <= 0.5 or non-positive dcf");
    }
  }
  if (meta.contains("spiral_hash") && meta["spiral_hash"] != set.hash()) { throw FormatError(path + ": spiral_hash mismatch"); }
  return set;
}

} // namespace mrf
