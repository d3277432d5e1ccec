#include "mrf/config.hpp"

#include "mrf/errors.hpp"

#include <algorithm>
#include <fstream>

namespace mrf {

namespace {

auto ranges_json(std::vector<GridRange> const &rs) -> Json
{
  Json out = Json::array();
  for (auto const &r : rs) { out.push_back({r.lo, r.step, r.hi}); }
  return out;
}

auto ranges_from(Json const &j) -> std::vector<GridRange>
{
  std::vector<GridRange> out;
  for (auto const &r : j) {
    if (!r.is_array() || r.size() != 3) { throw std::invalid_argument("grid ranges are [lo, step, hi] triples"); }
    out.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<double>()});
  }
  return out;
}

// Objects whose keys are user data rather than schema.
auto is_free_map(std::string const &path) -> bool
{
  return path == "/cost/weights";
}

void check_keys(Json const &doc, Json const &schema, std::string const &path)
{
  if (!doc.is_object()) { throw std::invalid_argument("config" + path + ": expected an object"); }
  for (auto const &[k, v] : doc.items()) {
    auto const sub = path + "/" + k;
    if (!schema.contains(k)) { throw std::invalid_argument("config: unknown key " + sub); }
    auto const &s = schema[k];
    if (s.is_object()) {
      if (is_free_map(sub)) {
        if (!v.is_object()) { throw std::invalid_argument("config" + sub + ": expected an object"); }
      } else {
        check_keys(v, s, sub);
      }
    } else if (s.is_number() != v.is_number() || s.is_boolean() != v.is_boolean() || s.is_string() != v.is_string() ||
               s.is_array() != v.is_array()) {
      throw std::invalid_argument("config" + sub + ": wrong value type");
    }
  }
}

} // namespace

auto config_to_json(RunConfig const &c) -> Json
{
  return {
    {"grid", c.grid},
    {"phantom", c.phantom},
    {"spiral",
     {{"n_interleaves", c.spiral.n_interleaves},
      {"gamma", c.spiral.gamma},
      {"pitch_inner", c.spiral.pitch_inner},
      {"pitch_outer", c.spiral.pitch_outer},
      {"readout_spacing", c.spiral.readout_spacing}}},
    {"nufft", {{"oversampling", c.nufft.oversampling}, {"kernel_width", c.nufft.kernel_width}, {"table_size", c.nufft.table_size}}},
    {"srf", {{"dcf_mode", dcf_mode_name(c.dcf_mode)}, {"full_sampling", c.full_sampling}}},
    {"phase", {{"enabled", c.phase_enabled}, {"direction", c.phase_direction}, {"min", c.phase_min}, {"max", c.phase_max}}},
    {"sequence",
     {{"n_timepoints", c.n_timepoints},
      {"flip_scale", c.flip_scale},
      {"inversion", c.inversion.enabled},
      {"ti_ms", c.inversion.ti_ms},
      {"rf_phase_deg", c.rf_phase_deg},
      {"epg_max_states", c.epg_max_states}}},
    {"dictionary",
     {{"t1_ranges", ranges_json(c.t1_ranges)},
      {"t2_ranges", ranges_json(c.t2_ranges)},
      {"include_tissues", c.dictionary_include_tissues}}},
    {"matching", {{"skip_threshold", c.match.skip_threshold}}},
    {"noise", {{"snr_db", c.snr_db}}},
    {"cost",
     {{"weights", c.cost.weights},
      {"qf_weight", c.cost.qf_weight},
      {"time_ref_ms", c.cost.time_ref_ms},
      {"formulation", formulation_name(c.cost.formulation)}}},
    {"optimizer",
     {{"n_segments", c.n_segments},
      {"flip_min", c.bounds.flip_min},
      {"flip_max", c.bounds.flip_max},
      {"tr_min", c.bounds.tr_min},
      {"tr_max", c.bounds.tr_max},
      {"dict_t1", {{"lo", c.opt_t1_lo}, {"hi", c.opt_t1_hi}, {"count", c.opt_t1_count}}},
      {"dict_t2", {{"lo", c.opt_t2_lo}, {"hi", c.opt_t2_hi}, {"count", c.opt_t2_count}}}}},
    {"anneal", c.anneal.to_json()},
    {"seed", c.seed},
    {"threads", c.threads},
  };
}

auto config_from_json(Json const &doc) -> RunConfig
{
  auto const defaults = config_to_json(RunConfig{});
  check_keys(doc, defaults, "");
  auto j = defaults;
  j.merge_patch(doc);
  if (doc.contains("cost") && doc["cost"].contains("weights")) { j["cost"]["weights"] = doc["cost"]["weights"]; }

  RunConfig c;
  try {
    c.grid = j["grid"].get<Index>();
    c.phantom = j["phantom"].get<std::string>();
    auto const &sp = j["spiral"];
    c.spiral = {c.grid,
                sp["n_interleaves"].get<Index>(),
                sp["gamma"].get<double>(),
                sp["pitch_inner"].get<double>(),
                sp["pitch_outer"].get<double>(),
                sp["readout_spacing"].get<double>()};
    auto const &nu = j["nufft"];
    c.nufft = {nu["oversampling"].get<double>(), nu["kernel_width"].get<Index>(), nu["table_size"].get<Index>()};
    c.dcf_mode = parse_dcf_mode(j["srf"]["dcf_mode"].get<std::string>());
    c.full_sampling = j["srf"]["full_sampling"].get<bool>();
    auto const &ph = j["phase"];
    c.phase_enabled = ph["enabled"].get<bool>();
    c.phase_direction = ph["direction"].get<std::string>();
    c.phase_min = ph["min"].get<double>();
    c.phase_max = ph["max"].get<double>();
    auto const &sq = j["sequence"];
    c.n_timepoints = sq["n_timepoints"].get<Index>();
    c.flip_scale = sq["flip_scale"].get<double>();
    c.inversion = {sq["inversion"].get<bool>(), sq["ti_ms"].get<double>()};
    c.rf_phase_deg = sq["rf_phase_deg"].get<double>();
    c.epg_max_states = sq["epg_max_states"].get<Index>();
    c.t1_ranges = ranges_from(j["dictionary"]["t1_ranges"]);
    c.t2_ranges = ranges_from(j["dictionary"]["t2_ranges"]);
    c.dictionary_include_tissues = j["dictionary"]["include_tissues"].get<bool>();
    c.match.skip_threshold = j["matching"]["skip_threshold"].get<double>();
    c.snr_db = j["noise"]["snr_db"].get<double>();
    auto const &co = j["cost"];
    c.cost.weights = co["weights"].get<std::map<std::string, double>>();
    c.cost.qf_weight = co["qf_weight"].get<double>();
    c.cost.time_ref_ms = co["time_ref_ms"].get<double>();
    c.cost.formulation = parse_formulation(co["formulation"].get<std::string>());
    auto const &op = j["optimizer"];
    c.n_segments = op["n_segments"].get<Index>();
    c.bounds = {op["flip_min"].get<double>(), op["flip_max"].get<double>(), op["tr_min"].get<double>(), op["tr_max"].get<double>()};
    c.opt_t1_lo = op["dict_t1"]["lo"].get<double>();
    c.opt_t1_hi = op["dict_t1"]["hi"].get<double>();
    c.opt_t1_count = op["dict_t1"]["count"].get<Index>();
    c.opt_t2_lo = op["dict_t2"]["lo"].get<double>();
    c.opt_t2_hi = op["dict_t2"]["hi"].get<double>();
    c.opt_t2_count = op["dict_t2"]["count"].get<Index>();
    auto const &an = j["anneal"];
    c.anneal = {an["initial_temp"].get<double>(),
                an["cooling_rate"].get<double>(),
                an["steps_per_temp"].get<Index>(),
                an["min_temp"].get<double>(),
                an["max_iterations"].get<Index>(),
                an["rng_seed"].get<std::uint64_t>(),
                an["step_scale"].get<double>()};
    c.seed = j["seed"].get<std::uint64_t>();
    c.threads = j["threads"].get<Index>();
  } catch (Json::exception const &e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (c.grid < kMinPhantomSize) { throw std::invalid_argument("config: grid must be >= " + std::to_string(kMinPhantomSize)); }
  if (c.phantom != "three" && c.phantom != "eleven") { throw std::invalid_argument("config: phantom must be three or eleven"); }
  if (c.n_timepoints < 1) { throw std::invalid_argument("config: n_timepoints must be >= 1"); }
  if (c.threads < 0) { throw std::invalid_argument("config: threads must be >= 0"); }
  // One seed drives everything unless the annealer's is pinned separately.
  if (!(doc.contains("anneal") && doc["anneal"].contains("rng_seed"))) { c.anneal.rng_seed = c.seed; }
  c.anneal.validate();
  return c;
}

auto load_config(std::string const &path) -> RunConfig
{
  std::ifstream f(path);
  if (!f) { throw std::runtime_error("cannot read config " + path); }
  Json doc;
  try {
    doc = Json::parse(f);
  } catch (Json::exception const &e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return config_from_json(doc);
}

auto build_phantom(RunConfig const &c) -> TissuePhantom
{
  Shape2 const shape{c.grid, c.grid};
  return c.phantom == "eleven" ? make_eleven_tissue_phantom(shape) : make_three_tissue_phantom(shape);
}

auto build_phase_map(RunConfig const &c) -> std::unique_ptr<PhaseMap>
{
  if (!c.phase_enabled) { return nullptr; }
  return std::make_unique<PhaseMap>(
    synthesize_phase_map({c.grid, c.grid}, canonical_direction(c.phase_direction), c.phase_min, c.phase_max));
}

auto build_spiral(RunConfig const &c) -> SpiralSet
{
  auto p = c.spiral;
  p.matrix_size = c.grid;
  return generate_spiral_set(p);
}

auto srf_options(RunConfig const &c) -> SrfOptions
{
  return {c.dcf_mode, c.full_sampling, c.nufft, Exec::Parallel};
}

auto default_schedule(RunConfig const &c) -> SequenceSchedule
{
  auto s = default_fisp_schedule(c.n_timepoints, c.flip_scale);
  s.inversion = c.inversion;
  s.rf_phase_deg = c.rf_phase_deg;
  s.validate();
  return s;
}

auto epg_options(RunConfig const &c) -> EpgOptions
{
  return {c.epg_max_states};
}

auto dictionary_grids(RunConfig const &c, std::vector<TissueSpec> const &tissues)
  -> std::pair<std::vector<double>, std::vector<double>>
{
  auto t1 = make_grid(c.t1_ranges);
  auto t2 = make_grid(c.t2_ranges);
  if (c.dictionary_include_tissues) {
    for (auto const &t : tissues) {
      if (t.is_void()) { continue; }
      t1.push_back(t.t1_ms);
      t2.push_back(t.t2_ms);
    }
    for (auto *g : {&t1, &t2}) {
      std::sort(g->begin(), g->end());
      g->erase(std::unique(g->begin(), g->end()), g->end());
    }
  }
  return {t1, t2};
}

} // namespace mrf
