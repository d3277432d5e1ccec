#include "mrf/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mrf {

void ScheduleParams::clamp()
{
  for (auto &f : flip_amp_deg) { f = std::clamp(f, bounds.flip_min, bounds.flip_max); }
  for (auto &t : tr_base_ms) { t = std::clamp(t, bounds.tr_min, bounds.tr_max); }
}

auto default_schedule_params(Index n_segments, Index n_timepoints) -> ScheduleParams
{
  if (n_segments < 1 || n_timepoints < n_segments) {
    throw std::invalid_argument("need 1 <= n_segments <= n_timepoints");
  }
  auto const ref = default_fisp_schedule(n_timepoints);
  ScheduleParams p;
  for (Index k = 0; k < n_segments; ++k) {
    auto const t = static_cast<std::size_t>((2 * k + 1) * n_timepoints / (2 * n_segments));
    p.flip_amp_deg.push_back(ref.flip_deg[t]);
    p.tr_base_ms.push_back(ref.tr_ms[t]);
  }
  p.clamp();
  return p;
}

auto expand(ScheduleParams const &params, ExpansionConfig const &config) -> SequenceSchedule
{
  auto const ns = params.n_segments();
  auto const nt = config.n_timepoints;
  auto const &b = params.bounds;
  if (ns < 1 || static_cast<Index>(params.tr_base_ms.size()) != ns) {
    throw std::invalid_argument("schedule params need matching, nonempty flip and TR segments");
  }
  if (nt < ns) { throw std::invalid_argument("fewer timepoints than segments"); }
  if (!(b.flip_min >= 0 && b.flip_max <= 90 && b.flip_min <= b.flip_max && b.tr_min > 0 && b.tr_min <= b.tr_max)) {
    throw std::invalid_argument("invalid schedule bounds");
  }
  auto amp = [&](Index k) { return params.flip_amp_deg[static_cast<std::size_t>(std::clamp<Index>(k, 0, ns - 1))]; };
  SequenceSchedule s;
  s.inversion = config.inversion;
  s.rf_phase_deg = config.rf_phase_deg;
  double const te = 0.5 * b.tr_min;
  for (Index t = 0; t < nt; ++t) {
    // Position in segment units, with segment centres at integers.
    double const u = (static_cast<double>(t) + 0.5) * static_cast<double>(ns) / static_cast<double>(nt) - 0.5;
    auto const k = static_cast<Index>(std::floor(u));
    double const f = u - static_cast<double>(k);
    double const p0 = amp(k - 1), p1 = amp(k), p2 = amp(k + 1), p3 = amp(k + 2);
    double const flip = p1 + 0.5 * f * (p2 - p0 + f * (2 * p0 - 5 * p1 + 4 * p2 - p3 + f * (3 * (p1 - p2) + p3 - p0)));
    s.flip_deg.push_back(std::clamp(flip, b.flip_min, b.flip_max));
    auto const seg = std::min<Index>(t * ns / nt, ns - 1);
    s.tr_ms.push_back(params.tr_base_ms[static_cast<std::size_t>(seg)]);
    s.te_ms.push_back(te);
  }
  s.validate();
  return s;
}

auto propose(ScheduleParams const &params, std::mt19937_64 &rng, double step_scale) -> ScheduleParams
{
  auto out = params;
  if (params.n_segments() < 1) { return out; }
  std::uniform_int_distribution<Index> pick(0, params.n_segments() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto const k = static_cast<std::size_t>(pick(rng));
  double const df = normal(rng);
  double const dt = normal(rng);
  auto const &b = params.bounds;
  out.flip_amp_deg[k] += step_scale * (b.flip_max - b.flip_min) * df;
  out.tr_base_ms[k] += step_scale * (b.tr_max - b.tr_min) * dt;
  out.clamp();
  return out;
}

void AnnealConfig::validate() const
{
  if (!(initial_temp > 0)) { throw std::invalid_argument("initial_temp must be positive"); }
  if (!(cooling_rate > 0 && cooling_rate < 1)) { throw std::invalid_argument("cooling_rate must be in (0, 1)"); }
  if (steps_per_temp < 1) { throw std::invalid_argument("steps_per_temp must be >= 1"); }
  if (!(min_temp > 0)) { throw std::invalid_argument("min_temp must be positive"); }
  if (max_iterations < 1) { throw std::invalid_argument("max_iterations must be >= 1"); }
  if (!(step_scale >= 0)) { throw std::invalid_argument("step_scale must be >= 0"); }
}

auto AnnealConfig::to_json() const -> Json
{
  return {{"initial_temp", initial_temp},
          {"cooling_rate", cooling_rate},
          {"steps_per_temp", steps_per_temp},
          {"min_temp", min_temp},
          {"max_iterations", max_iterations},
          {"rng_seed", rng_seed},
          {"step_scale", step_scale}};
}

auto anneal(ScheduleParams const &initial, Objective const &objective, AnnealConfig const &config) -> AnnealResult
{
  config.validate();
  AnnealResult result;
  std::mt19937_64 rng(config.rng_seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  auto current = initial;
  current.clamp();
  double current_cost;
  try {
    current_cost = objective(current);
  } catch (std::exception const &e) {
    result.best_params = current;
    result.aborted = true;
    result.error = e.what();
    return result;
  }
  result.best_params = current;
  result.best_cost = current_cost;

  double temp = config.initial_temp;
  for (Index it = 0; it < config.max_iterations; ++it) {
    if (it > 0 && it % config.steps_per_temp == 0) { temp *= config.cooling_rate; }
    bool const greedy = temp <= config.min_temp;
    double const scale = config.step_scale * std::min(1.0, temp / config.initial_temp);
    auto candidate = propose(current, rng, scale);
    double cost;
    try {
      cost = objective(candidate);
    } catch (std::exception const &e) {
      result.aborted = true;
      result.error = e.what();
      return result;
    }
    double const delta = cost - current_cost;
    bool accepted;
    if (delta <= 0) {
      accepted = true;
    } else if (greedy) {
      accepted = false;
    } else {
      accepted = uniform(rng) < std::exp(-delta / temp);
    }
    if (accepted) {
      current = std::move(candidate);
      current_cost = cost;
      if (cost < result.best_cost) {
        result.best_cost = cost;
        result.best_params = current;
      }
    }
    result.trace.push_back({it, temp, cost, accepted, result.best_cost});
  }
  return result;
}

auto calibrate_initial_temperature(ScheduleParams const &start,
                                   Objective const &objective,
                                   double step_scale,
                                   std::uint64_t seed,
                                   Index samples,
                                   double target_acceptance) -> double
{
  if (!(target_acceptance > 0 && target_acceptance < 1)) { throw std::invalid_argument("target acceptance must be in (0, 1)"); }
  std::mt19937_64 rng(seed);
  double const base = objective(start);
  double sum = 0;
  Index uphill = 0;
  for (Index i = 0; i < samples; ++i) {
    double const delta = objective(propose(start, rng, step_scale)) - base;
    if (delta > 0) {
      sum += delta;
      ++uphill;
    }
  }
  if (uphill == 0) { return 1.0; }
  return -(sum / static_cast<double>(uphill)) / std::log(target_acceptance);
}

void write_trace_csv(std::vector<TraceRow> const &trace, std::string const &path, Json const &header)
{
  std::ofstream f(path);
  if (!f) { throw std::runtime_error("cannot write " + path); }
  if (!header.is_null()) { f << "# " << header.dump() << '\n'; }
  f << "iteration,temperature,cost,accepted,best_cost\n";
  f.precision(17);
  for (auto const &r : trace) {
    f << r.iteration << ',' << r.temperature << ',' << r.cost << ',' << (r.accepted ? 1 : 0) << ',' << r.best_cost << '\n';
  }
  if (!f) { throw std::runtime_error("write failed: " + path); }
}

auto log_grid(double lo, double hi, Index count, std::vector<double> const &extra) -> std::vector<double>
{
  if (!(lo > 0 && hi > lo) || count < 2) { throw std::invalid_argument("log grid needs 0 < lo < hi and count >= 2"); }
  std::vector<double> out;
  for (Index i = 0; i < count; ++i) {
    double const v = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
    out.push_back(std::round(v * 10.0) / 10.0);
  }
  out.insert(out.end(), extra.begin(), extra.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

auto optimization_grids(std::vector<TissueSpec> const &tissues) -> std::pair<std::vector<double>, std::vector<double>>
{
  std::vector<double> t1x, t2x;
  for (auto const &t : tissues) {
    if (t.is_void()) { continue; }
    t1x.push_back(t.t1_ms);
    t2x.push_back(t.t2_ms);
  }
  return {log_grid(50, 4000, 40, t1x), log_grid(10, 2000, 30, t2x)};
}

auto evaluate_objective(ScheduleParams const &params, ObjectiveContext const &context) -> ObjectiveResult
{
  if (!context.srf || !context.phantom) { throw std::invalid_argument("objective context needs spatial responses and phantom"); }
  ObjectiveResult r;
  r.schedule = expand(params, context.expansion);
  auto const signals = simulate_tissue_signals(context.phantom->tissues(), r.schedule, context.epg);
  auto series = simulate_fast(*context.srf, signals);
  series.schedule_hash = r.schedule.hash();
  auto const dict = build_dictionary(context.dict_t1, context.dict_t2, r.schedule, Exec::Parallel, context.epg);
  r.maps = match_series(series, dict, context.match);
  std::vector<std::string> labels;
  for (auto const &[label, w] : context.cost.weights) { labels.push_back(label); }
  auto const errors = compute_segment_rmse(r.maps, *context.phantom, labels);
  std::optional<std::map<std::string, double>> qf;
  if (context.cost.qf_weight > 0) {
    qf = context.quality_factors ? context.quality_factors(signals, &dict) : quality_factor_proxy(signals, &dict);
  }
  r.report = compute_cost(errors, qf, r.schedule, context.cost);
  return r;
}

auto make_objective(ObjectiveContext const &context) -> Objective
{
  return [context](ScheduleParams const &p) { return evaluate_objective(p, context).report.total_cost; };
}

} // namespace mrf
