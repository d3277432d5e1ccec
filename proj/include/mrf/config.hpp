#pragma once

#include "cost.hpp"
#include "matching.hpp"
#include "optimizer.hpp"
#include "sequence.hpp"
#include "spatial_response.hpp"
#include "trajectory.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace mrf {

struct RunConfig
{
  Index grid = 256;
  std::string phantom = "three"; // three | eleven
  SpiralParams spiral{};
  NufftParams nufft{};
  DcfMode dcf_mode = DcfMode::Scaled;
  bool full_sampling = false;

  bool phase_enabled = true;
  std::string phase_direction = "+x";
  double phase_min = -std::numbers::pi;
  double phase_max = 2 * std::numbers::pi;

  Index n_timepoints = 480;
  double flip_scale = 1.0;
  Inversion inversion{};
  double rf_phase_deg = 0;
  Index epg_max_states = 0;

  std::vector<GridRange> t1_ranges = default_t1_ranges();
  std::vector<GridRange> t2_ranges = default_t2_ranges();
  bool dictionary_include_tissues = true;

  MatchOptions match{};
  double snr_db = 9.0;
  CostConfig cost{};

  Index n_segments = 48;
  ScheduleBounds bounds{};
  double opt_t1_lo = 50, opt_t1_hi = 4000;
  Index opt_t1_count = 40;
  double opt_t2_lo = 10, opt_t2_hi = 2000;
  Index opt_t2_count = 30;
  AnnealConfig anneal{};

  std::uint64_t seed = 1;
  Index threads = 0; // 0: OpenMP default
};

auto config_to_json(RunConfig const &c) -> Json;
/// Overlays `doc` on the defaults. Unknown keys and wrong value types throw std::invalid_argument.
auto config_from_json(Json const &doc) -> RunConfig;
auto load_config(std::string const &path) -> RunConfig;

auto build_phantom(RunConfig const &c) -> TissuePhantom;
auto build_phase_map(RunConfig const &c) -> std::unique_ptr<PhaseMap>; // null when disabled
auto build_spiral(RunConfig const &c) -> SpiralSet;
auto srf_options(RunConfig const &c) -> SrfOptions;
auto default_schedule(RunConfig const &c) -> SequenceSchedule;
auto epg_options(RunConfig const &c) -> EpgOptions;
/// Dictionary grids from the configured ranges, plus the phantom tissue values when enabled.
auto dictionary_grids(RunConfig const &c, std::vector<TissueSpec> const &tissues)
  -> std::pair<std::vector<double>, std::vector<double>>;

} // namespace mrf
