#include "mrf/cost.hpp"

#include <algorithm>
#include <cmath>

namespace mrf {

auto compute_segment_rmse(QuantMaps const &maps, TissuePhantom const &phantom, std::vector<std::string> labels)
  -> std::vector<SegmentError>
{
  if (maps.t1.shape() != phantom.shape() || maps.t2.shape() != phantom.shape()) {
    throw std::invalid_argument("maps " + to_string(maps.t1.shape()) + " do not match phantom " +
                                to_string(phantom.shape()));
  }
  if (labels.empty()) {
    for (auto const &t : phantom.tissues()) {
      if (!t.is_void()) { labels.push_back(t.label); }
    }
  }
  std::vector<SegmentError> out;
  for (auto const &label : labels) {
    auto const i = phantom.index_of(label);
    if (i < 0) { throw std::invalid_argument("phantom has no tissue '" + label + "'"); }
    auto const &tissue = phantom.tissue(i);
    if (tissue.is_void()) { throw std::invalid_argument("tissue '" + label + "' has no relaxation times"); }
    auto const &mask = phantom.mask(i);
    double s1 = 0, s2 = 0;
    Index n = 0;
    for (Index p = 0; p < mask.size(); ++p) {
      if (!(mask[p] >= 0.5f)) { continue; }
      bool const matched = maps.match_mask.size() == 0 || maps.match_mask[p] != 0;
      double const t1 = matched ? maps.t1[p] : 0.0;
      double const t2 = matched ? maps.t2[p] : 0.0;
      s1 += (t1 - tissue.t1_ms) * (t1 - tissue.t1_ms);
      s2 += (t2 - tissue.t2_ms) * (t2 - tissue.t2_ms);
      ++n;
    }
    if (n == 0) { throw std::invalid_argument("tissue '" + label + "' has an empty segment"); }
    auto const dn = static_cast<double>(n);
    out.push_back({label, std::sqrt(s1 / dn) / tissue.t1_ms, std::sqrt(s2 / dn) / tissue.t2_ms, n});
  }
  return out;
}

auto formulation_name(CostFormulation f) -> std::string
{
  return f == CostFormulation::ScanTimeScaled ? "scan_time_scaled" : "penalty_divided";
}

auto parse_formulation(std::string const &name) -> CostFormulation
{
  if (name == "scan_time_scaled") { return CostFormulation::ScanTimeScaled; }
  if (name == "penalty_divided") { return CostFormulation::PenaltyDivided; }
  throw std::invalid_argument("unknown cost formulation '" + name + "'");
}

auto compute_cost(std::vector<SegmentError> const &errors,
                  std::optional<std::map<std::string, double>> const &quality_factors,
                  SequenceSchedule const &schedule,
                  CostConfig const &config) -> CostReport
{
  bool any = false;
  for (auto const &[label, w] : config.weights) {
    if (!(w >= 0) || !std::isfinite(w)) { throw std::invalid_argument("cost weight for '" + label + "' must be >= 0"); }
    any = any || w > 0;
  }
  if (!any) { throw std::invalid_argument("cost weights must not all be zero"); }
  if (!(config.qf_weight >= 0)) { throw std::invalid_argument("qf_weight must be >= 0"); }
  if (!(config.time_ref_ms > 0)) { throw std::invalid_argument("time_ref_ms must be positive"); }
  schedule.validate();
  double const scan = schedule.scan_time_ms();
  if (!(scan > 0)) { throw std::invalid_argument("scan time must be positive"); }

  CostReport r;
  r.errors = errors;
  r.config = config;
  r.scan_time_ms = scan;
  r.penalty_factor = config.time_ref_ms / scan;
  for (auto const &[label, w] : config.weights) {
    auto it = std::find_if(errors.begin(), errors.end(), [&](auto const &e) { return e.label == label; });
    if (it == errors.end()) { throw std::invalid_argument("no segment error for weighted tissue '" + label + "'"); }
    r.error_term += w * (it->rmse_t1_rel + it->rmse_t2_rel);
  }
  if (quality_factors && config.qf_weight > 0) {
    r.quality_factors = *quality_factors;
    for (auto const &[label, w] : config.weights) {
      if (w == 0) { continue; }
      auto it = quality_factors->find(label);
      if (it == quality_factors->end()) { throw std::invalid_argument("no quality factor for tissue '" + label + "'"); }
      r.qf_term += 1.0 / (1.0 + it->second);
    }
    r.qf_term *= config.qf_weight;
  } else if (quality_factors) {
    r.quality_factors = *quality_factors;
  }
  double const combined = r.error_term + r.qf_term;
  r.total_cost = config.formulation == CostFormulation::ScanTimeScaled ? combined * scan / config.time_ref_ms
                                                                       : combined * r.penalty_factor;
  return r;
}

auto CostReport::to_json() const -> Json
{
  Json errs = Json::array();
  for (auto const &e : errors) {
    errs.push_back({{"label", e.label}, {"rmse_t1_rel", e.rmse_t1_rel}, {"rmse_t2_rel", e.rmse_t2_rel}, {"pixels", e.pixels}});
  }
  return {{"errors", errs},
          {"quality_factors", quality_factors},
          {"scan_time_ms", scan_time_ms},
          {"penalty_factor", penalty_factor},
          {"error_term", error_term},
          {"qf_term", qf_term},
          {"total_cost", total_cost},
          {"weights", config.weights},
          {"qf_weight", config.qf_weight},
          {"time_ref_ms", config.time_ref_ms},
          {"formulation", formulation_name(config.formulation)}};
}

auto quality_factor_proxy(std::vector<TissueSignal> const &signals, Dictionary const *) -> std::map<std::string, double>
{
  std::vector<double> norms;
  for (auto const &s : signals) {
    double n = 0;
    for (auto v : s.d) { n += std::norm(v); }
    norms.push_back(std::sqrt(n));
  }
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    if (!(norms[i] > 0)) { continue; }
    double max_corr = 0;
    for (std::size_t j = 0; j < signals.size(); ++j) {
      if (j == i || !(norms[j] > 0)) { continue; }
      if (signals[j].d.size() != signals[i].d.size()) { throw std::invalid_argument("signals differ in length"); }
      Cxd acc{0, 0};
      for (std::size_t t = 0; t < signals[i].d.size(); ++t) { acc += std::conj(signals[i].d[t]) * signals[j].d[t]; }
      max_corr = std::max(max_corr, std::min(1.0, std::abs(acc) / (norms[i] * norms[j])));
    }
    out[signals[i].label] = norms[i] * (1.0 - max_corr);
  }
  return out;
}

} // namespace mrf
