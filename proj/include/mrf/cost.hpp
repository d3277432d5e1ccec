#pragma once

#include "matching.hpp"
#include "phantom.hpp"

#include <functional>
#include <map>
#include <optional>

namespace mrf {

struct SegmentError
{
  std::string label;
  double rmse_t1_rel = 0;
  double rmse_t2_rel = 0;
  Index pixels = 0;
};

/// Relative RMSE of the T1 and T2 maps over each tissue's segment (pixels with P_i >= 0.5).
/// Unmatched pixels contribute a map value of 0. An empty `labels` selects every non-void tissue.
auto compute_segment_rmse(QuantMaps const &maps, TissuePhantom const &phantom, std::vector<std::string> labels = {})
  -> std::vector<SegmentError>;

enum class CostFormulation
{
  ScanTimeScaled, // error_term * scan_time / time_ref: longer scans cost more
  PenaltyDivided, // error_term / (scan_time / time_ref): longer scans cost less
};

auto formulation_name(CostFormulation f) -> std::string;
auto parse_formulation(std::string const &name) -> CostFormulation;

struct CostConfig
{
  std::map<std::string, double> weights{{"wm", 1.0}, {"gm", 1.0}, {"csf", 1.0}};
  double qf_weight = 0;
  double time_ref_ms = 6000;
  CostFormulation formulation = CostFormulation::ScanTimeScaled;
};

struct CostReport
{
  std::vector<SegmentError> errors;
  std::map<std::string, double> quality_factors;
  double scan_time_ms = 0;
  double penalty_factor = 0; // time_ref / scan_time
  double error_term = 0;
  double qf_term = 0;
  double total_cost = 0;
  CostConfig config;

  auto to_json() const -> Json;
};

/// error_term = sum_i w_i (rmse_t1_rel + rmse_t2_rel), plus qf_weight * sum_i 1 / (1 + qf_i) when
/// quality factors are supplied. Tissues without a weight are ignored; a weighted tissue missing
/// from `errors` is an error.
auto compute_cost(std::vector<SegmentError> const &errors,
                  std::optional<std::map<std::string, double>> const &quality_factors,
                  SequenceSchedule const &schedule,
                  CostConfig const &config) -> CostReport;

using QualityFactorHook =
  std::function<std::map<std::string, double>(std::vector<TissueSignal> const &, Dictionary const *)>;

/// qf_i = |d_i| (1 - max_{j != i} |<d_i, d_j>| / (|d_i| |d_j|)). Void (zero) signals are skipped
/// and get no entry.
auto quality_factor_proxy(std::vector<TissueSignal> const &signals, Dictionary const *dict = nullptr)
  -> std::map<std::string, double>;

} // namespace mrf
