#include "mrf/formats.hpp"

#include "mrf/errors.hpp"

namespace mrf {

namespace {

void require_kind(TensorHeader const &h, std::string const &kind, std::string const &path)
{
  if (h.meta.value("kind", "") != kind) { throw FormatError(path + ": not a " + kind + " file"); }
}

} // namespace

void save_series(ImageSeries const &series, std::string const &path, Json extra_meta)
{
  std::vector<Cx> data;
  data.reserve(series.frames.size() * static_cast<std::size_t>(series.shape.size()));
  for (auto const &f : series.frames) {
    if (f.shape() != series.shape) { throw std::invalid_argument("series frames differ in shape"); }
    data.insert(data.end(), f.span().begin(), f.span().end());
  }
  Json meta = {{"kind", "series"},
               {"n_timepoints", series.n_timepoints()},
               {"interleaf_order", series.interleaf_order},
               {"method", series.method},
               {"phantom_hash", series.phantom_hash},
               {"spiral_hash", series.spiral_hash},
               {"phase_hash", series.phase_hash},
               {"schedule_hash", series.schedule_hash}};
  write_tensor(path, {series.n_timepoints(), series.shape.rows, series.shape.cols}, data, merge_meta(std::move(meta), extra_meta));
}

auto load_series(std::string const &path) -> ImageSeries
{
  auto t = read_cx_tensor(path);
  require_kind(t.header, "series", path);
  if (t.header.shape.size() != 3) { throw FormatError(path + ": series must be [T, rows, cols]"); }
  ImageSeries s;
  auto const nt = t.header.shape[0];
  s.shape = {t.header.shape[1], t.header.shape[2]};
  try {
    auto const &m = t.header.meta;
    s.interleaf_order = m.at("interleaf_order").get<std::vector<Index>>();
    s.method = m.at("method").get<std::string>();
    s.phantom_hash = m.at("phantom_hash").get<std::string>();
    s.spiral_hash = m.at("spiral_hash").get<std::string>();
    s.phase_hash = m.at("phase_hash").get<std::string>();
    s.schedule_hash = m.at("schedule_hash").get<std::string>();
  } catch (Json::exception const &e) {
    throw FormatError(path + ": bad series metadata: " + e.what());
  }
  // Unsampled series (ideal, gaussian) carry no interleaf order.
  if (!s.interleaf_order.empty() && static_cast<Index>(s.interleaf_order.size()) != nt) {
    throw FormatError(path + ": interleaf_order length mismatch");
  }
  auto const n = s.shape.size();
  for (Index f = 0; f < nt; ++f) {
    auto const first = t.data.begin() + f * n;
    s.frames.emplace_back(s.shape, std::vector<Cx>(first, first + n));
  }
  return s;
}

void save_dictionary(Dictionary const &dict, std::string const &path, Json extra_meta)
{
  Json meta = {{"kind", "dictionary"},
               {"t1_list", dict.t1_ms},
               {"t2_list", dict.t2_ms},
               {"norm_scale", dict.norm_scale},
               {"n_timepoints", dict.n_timepoints},
               {"schedule_hash", dict.schedule_hash}};
  write_tensor(path, {dict.entry_count(), dict.n_timepoints}, dict.signals, merge_meta(std::move(meta), extra_meta));
}

auto load_dictionary(std::string const &path) -> Dictionary
{
  auto t = read_cx_tensor(path);
  require_kind(t.header, "dictionary", path);
  if (t.header.shape.size() != 2) { throw FormatError(path + ": dictionary must be [E, T]"); }
  Dictionary d;
  try {
    auto const &m = t.header.meta;
    d.t1_ms = m.at("t1_list").get<std::vector<double>>();
    d.t2_ms = m.at("t2_list").get<std::vector<double>>();
    d.norm_scale = m.at("norm_scale").get<std::vector<double>>();
    d.schedule_hash = m.at("schedule_hash").get<std::string>();
  } catch (Json::exception const &e) {
    throw FormatError(path + ": bad dictionary metadata: " + e.what());
  }
  auto const e = t.header.shape[0];
  d.n_timepoints = t.header.shape[1];
  if (static_cast<Index>(d.t1_ms.size()) != e || static_cast<Index>(d.t2_ms.size()) != e ||
      static_cast<Index>(d.norm_scale.size()) != e) {
    throw FormatError(path + ": entry lists do not match shape");
  }
  for (Index i = 0; i < e; ++i) {
    if (d.t2_ms[static_cast<std::size_t>(i)] > d.t1_ms[static_cast<std::size_t>(i)]) {
      throw FormatError(path + ": entry with t2 > t1");
    }
  }
  d.signals = std::move(t.data);
  return d;
}

void save_maps(QuantMaps const &maps, std::string const &path, Json extra_meta)
{
  auto const shape = maps.t1.shape();
  std::vector<float> data;
  for (auto const *g : {&maps.t1, &maps.t2, &maps.m0}) {
    if (g->shape() != shape) { throw std::invalid_argument("maps differ in shape"); }
    data.insert(data.end(), g->span().begin(), g->span().end());
  }
  for (Index p = 0; p < shape.size(); ++p) { data.push_back(maps.match_mask[p] ? 1.0f : 0.0f); }
  Json meta = {{"kind", "maps"}, {"planes", {"t1_ms", "t2_ms", "m0", "match_mask"}}};
  write_tensor(path, {4, shape.rows, shape.cols}, data, merge_meta(std::move(meta), extra_meta));
}

auto load_maps(std::string const &path) -> QuantMaps
{
  auto t = read_real_tensor(path);
  require_kind(t.header, "maps", path);
  if (t.header.shape.size() != 3 || t.header.shape[0] != 4) { throw FormatError(path + ": maps must be [4, rows, cols]"); }
  Shape2 const shape{t.header.shape[1], t.header.shape[2]};
  auto const n = shape.size();
  auto plane = [&](Index k) {
    auto const first = t.data.begin() + k * n;
    return RealGrid(shape, std::vector<float>(first, first + n));
  };
  QuantMaps maps{plane(0), plane(1), plane(2), Grid2<std::uint8_t>(shape)};
  for (Index p = 0; p < n; ++p) { maps.match_mask[p] = t.data[static_cast<std::size_t>(3 * n + p)] != 0 ? 1 : 0; }
  return maps;
}

} // namespace mrf
