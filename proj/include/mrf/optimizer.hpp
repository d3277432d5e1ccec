#pragma once

#include "cost.hpp"
#include "matching.hpp"
#include "sequence.hpp"
#include "spatial_response.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace mrf {

struct ScheduleBounds
{
  double flip_min = 5, flip_max = 70;
  double tr_min = 11, tr_max = 15;

  auto operator==(ScheduleBounds const &) const -> bool = default;
};

/// Segment controls of a schedule: one flip amplitude and one base TR per segment.
struct ScheduleParams
{
  std::vector<double> flip_amp_deg;
  std::vector<double> tr_base_ms;
  ScheduleBounds bounds{};

  auto n_segments() const -> Index { return static_cast<Index>(flip_amp_deg.size()); }
  void clamp();
  auto operator==(ScheduleParams const &) const -> bool = default;
};

/// Segments whose flip amplitudes and TRs sample the default schedule at the segment centres.
auto default_schedule_params(Index n_segments = 48, Index n_timepoints = 480) -> ScheduleParams;

struct ExpansionConfig
{
  Index n_timepoints = 480;
  Inversion inversion{};
  double rf_phase_deg = 0;
};

/// Flip angles follow a Catmull-Rom curve through the segment amplitudes (placed at segment
/// centres, clamped to the flip bounds); TR is constant within a segment; TE is half the lower TR bound.
auto expand(ScheduleParams const &params, ExpansionConfig const &config) -> SequenceSchedule;

/// Perturbs one random segment's flip and TR by Gaussian steps of std step_scale x (bound range), then clamps.
auto propose(ScheduleParams const &params, std::mt19937_64 &rng, double step_scale) -> ScheduleParams;

struct AnnealConfig
{
  double initial_temp = 1.0;
  double cooling_rate = 0.95;
  Index steps_per_temp = 100;
  /// At or below this temperature only improvements are accepted.
  double min_temp = 1e-4;
  Index max_iterations = 5000;
  std::uint64_t rng_seed = 1;
  /// Proposal step at the initial temperature; it shrinks in proportion to T / initial_temp.
  double step_scale = 0.2;

  void validate() const;
  auto to_json() const -> Json;
};

struct TraceRow
{
  Index iteration = 0;
  double temperature = 0;
  double cost = 0;
  bool accepted = false;
  double best_cost = 0;
};

struct AnnealResult
{
  ScheduleParams best_params;
  double best_cost = 0;
  std::vector<TraceRow> trace;
  bool aborted = false;
  std::string error;
};

using Objective = std::function<double(ScheduleParams const &)>;

/// Metropolis simulated annealing with geometric cooling every steps_per_temp iterations.
/// An objective exception ends the run with `aborted` set and the trace so far.
auto anneal(ScheduleParams const &initial, Objective const &objective, AnnealConfig const &config) -> AnnealResult;

/// Initial temperature giving roughly `target_acceptance` for uphill moves proposed around `start`.
auto calibrate_initial_temperature(ScheduleParams const &start,
                                   Objective const &objective,
                                   double step_scale,
                                   std::uint64_t seed,
                                   Index samples = 20,
                                   double target_acceptance = 0.6) -> double;

void write_trace_csv(std::vector<TraceRow> const &trace, std::string const &path, Json const &header = {});

/// Everything the objective needs that stays fixed over a run. The spatial responses are
/// computed once by the caller and only read here.
struct ObjectiveContext
{
  SpatialResponseSet const *srf = nullptr;
  TissuePhantom const *phantom = nullptr;
  std::vector<double> dict_t1, dict_t2;
  ExpansionConfig expansion{};
  CostConfig cost{};
  MatchOptions match{};
  QualityFactorHook quality_factors{};
  EpgOptions epg{};
};

/// log-spaced grid of `count` values in [lo, hi] merged with `extra`.
auto log_grid(double lo, double hi, Index count, std::vector<double> const &extra = {}) -> std::vector<double>;

/// Coarse optimisation dictionary grids (40 T1 x 30 T2, plus the tissue values).
auto optimization_grids(std::vector<TissueSpec> const &tissues) -> std::pair<std::vector<double>, std::vector<double>>;

struct ObjectiveResult
{
  SequenceSchedule schedule;
  QuantMaps maps;
  CostReport report;
};

auto evaluate_objective(ScheduleParams const &params, ObjectiveContext const &context) -> ObjectiveResult;
auto make_objective(ObjectiveContext const &context) -> Objective;

} // namespace mrf
