#pragma once

#include "grid.hpp"
#include "phantom.hpp"
#include "tensor_io.hpp"

#include <string>
#include <vector>

namespace mrf {

struct Inversion
{
  bool enabled = true;
  double ti_ms = 20.64;
};

/// FISP flip-angle / TR train.
struct SequenceSchedule
{
  std::vector<double> flip_deg;
  std::vector<double> tr_ms;
  std::vector<double> te_ms;
  Inversion inversion{};
  double rf_phase_deg = 0;

  auto n_timepoints() const -> Index { return static_cast<Index>(flip_deg.size()); }
  /// TI (when inversion is on) plus the sum of all TRs.
  auto scan_time_ms() const -> double;
  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  auto hash() const -> std::string;
};

struct EpgOptions
{
  /// Number of dephasing states tracked; 0 means n_timepoints + 1 (exact).
  Index max_states = 0;
};

/// Extended phase graph FISP simulation with M0 = 1. Per TR: RF, relaxation over TE, record F+0,
/// relaxation over TR - TE, one unit of gradient dephasing.
auto simulate_signal(double t1_ms, double t2_ms, SequenceSchedule const &schedule, EpgOptions const &options = {})
  -> std::vector<Cxd>;

struct TissueSignal
{
  std::string label;
  std::vector<Cxd> d;
};

/// One signal per tissue; void tissues get an all-zero signal without simulation.
auto simulate_tissue_signals(std::vector<TissueSpec> const &tissues,
                             SequenceSchedule const &schedule,
                             EpgOptions const &options = {}) -> std::vector<TissueSignal>;

struct Dictionary
{
  std::vector<double> t1_ms, t2_ms;
  /// Unit-norm signals, entry-major: entry e occupies [e * n_timepoints, (e + 1) * n_timepoints).
  std::vector<Cx> signals;
  /// Original L2 norm of each simulated signal.
  std::vector<double> norm_scale;
  Index n_timepoints = 0;
  std::string schedule_hash;

  auto entry_count() const -> Index { return static_cast<Index>(t1_ms.size()); }
  auto signal(Index e) const -> std::span<Cx const>
  {
    return std::span<Cx const>(signals).subspan(static_cast<std::size_t>(e * n_timepoints),
                                                static_cast<std::size_t>(n_timepoints));
  }
  /// Index of the exact (t1, t2) entry, or -1.
  auto find(double t1, double t2) const -> Index;
};

/// Entries are the feasible (t2 <= t1) pairs of the Cartesian grid, t1-major.
auto build_dictionary(std::vector<double> const &t1_grid,
                      std::vector<double> const &t2_grid,
                      SequenceSchedule const &schedule,
                      Exec exec = Exec::Parallel,
                      EpgOptions const &options = {}) -> Dictionary;

/// Non-canonical stand-in for a published FISP train: four half-sine flip lobes on a 5 degree floor
/// (peak 70 * flip_scale), TR oscillating in [11, 15] ms, constant TE of half the shortest TR,
/// ideal inversion with TI = 20.64 ms.
auto default_fisp_schedule(Index n_timepoints = 480, double flip_scale = 1.0) -> SequenceSchedule;

/// Inclusive ranges lo:step:hi, concatenated, sorted and deduplicated.
struct GridRange
{
  double lo, step, hi;
};
auto make_grid(std::vector<GridRange> const &ranges) -> std::vector<double>;
auto default_t1_ranges() -> std::vector<GridRange>;
auto default_t2_ranges() -> std::vector<GridRange>;

auto schedule_to_json(SequenceSchedule const &s) -> Json;
auto schedule_from_json(Json const &j) -> SequenceSchedule;
void save_schedule(SequenceSchedule const &s, std::string const &path, Json extra_meta = Json::object());
auto load_schedule(std::string const &path) -> SequenceSchedule;

} // namespace mrf
