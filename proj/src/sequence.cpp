#include "mrf/sequence.hpp"

#include "mrf/errors.hpp"
#include "mrf/hash.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <numbers>

namespace mrf {

auto SequenceSchedule::scan_time_ms() const -> double
{
  double t = inversion.enabled ? inversion.ti_ms : 0.0;
  for (auto tr : tr_ms) { t += tr; }
  return t;
}

void SequenceSchedule::validate() const
{
  auto const n = flip_deg.size();
  if (n < 1) { throw std::invalid_argument("schedule needs at least one timepoint"); }
  if (tr_ms.size() != n || te_ms.size() != n) {
    throw std::invalid_argument("schedule flip/tr/te arrays differ in length");
  }
  for (std::size_t t = 0; t < n; ++t) {
    auto const at = " at timepoint " + std::to_string(t);
    if (!(flip_deg[t] >= 0 && flip_deg[t] <= 90)) { throw std::invalid_argument("flip angle outside [0, 90] deg" + at); }
    if (!(te_ms[t] >= 0)) { throw std::invalid_argument("negative TE" + at); }
    if (!(tr_ms[t] > te_ms[t]) || !std::isfinite(tr_ms[t])) { throw std::invalid_argument("TR must exceed TE" + at); }
  }
  if (inversion.enabled && !(inversion.ti_ms >= 0 && std::isfinite(inversion.ti_ms))) {
    throw std::invalid_argument("inversion time must be finite and non-negative");
  }
  if (!std::isfinite(rf_phase_deg)) { throw std::invalid_argument("RF phase must be finite"); }
  auto const total = scan_time_ms();
  if (!(total > 0) || !std::isfinite(total)) { throw std::invalid_argument("scan time must be finite and positive"); }
}

auto SequenceSchedule::hash() const -> std::string
{
  Hasher h;
  h.text("schedule")
    .values(std::span<double const>(flip_deg))
    .values(std::span<double const>(tr_ms))
    .values(std::span<double const>(te_ms))
    .value(static_cast<int>(inversion.enabled))
    .value(inversion.ti_ms)
    .value(rf_phase_deg);
  return h.hex();
}

auto simulate_signal(double t1_ms, double t2_ms, SequenceSchedule const &schedule, EpgOptions const &options)
  -> std::vector<Cxd>
{
  if (!(t1_ms > 0) || !(t2_ms > 0)) { throw std::invalid_argument("simulate_signal: T1 and T2 must be positive"); }
  schedule.validate();
  auto const n = schedule.n_timepoints();
  Index const cap = options.max_states > 0 ? options.max_states : n + 1;

  // fm has one spare slot so the downward shift can always read fm[active].
  std::vector<Cxd> fp(static_cast<std::size_t>(cap) + 1), fm(static_cast<std::size_t>(cap) + 1);
  std::vector<double> z(static_cast<std::size_t>(cap) + 1);
  z[0] = 1.0;

  auto relax = [&](double tau, Index active) {
    if (tau <= 0) { return; }
    double const e1 = std::exp(-tau / t1_ms);
    double const e2 = std::exp(-tau / t2_ms);
    for (Index k = 0; k < active; ++k) {
      fp[static_cast<std::size_t>(k)] *= e2;
      fm[static_cast<std::size_t>(k)] *= e2;
      z[static_cast<std::size_t>(k)] *= e1;
    }
    z[0] += 1.0 - e1;
  };

  if (schedule.inversion.enabled) {
    z[0] = -z[0];
    relax(schedule.inversion.ti_ms, 1);
  }

  double const phi = schedule.rf_phase_deg * std::numbers::pi / 180.0;
  Cxd const eph = std::polar(1.0, phi);
  Cxd const e2ph = std::polar(1.0, 2 * phi);
  Cxd const j{0, 1};

  std::vector<Cxd> signal(static_cast<std::size_t>(n));
  Index live = 1; // states >= live are zero
  for (Index t = 0; t < n; ++t) {
    // A state k needs k more gradient shifts to reach the echo, so states beyond the remaining
    // number of readouts can never be observed again.
    Index const active = std::min(live, n - t);
    double const a = schedule.flip_deg[static_cast<std::size_t>(t)] * std::numbers::pi / 180.0;
    double const c2 = std::cos(a / 2) * std::cos(a / 2);
    double const s2 = std::sin(a / 2) * std::sin(a / 2);
    double const sa = std::sin(a);
    double const ca = std::cos(a);
    for (Index k = 0; k < active; ++k) {
      auto const i = static_cast<std::size_t>(k);
      Cxd const p = fp[i], m = fm[i];
      double const zz = z[i];
      fp[i] = c2 * p + e2ph * s2 * m - j * eph * sa * zz;
      fm[i] = std::conj(e2ph) * s2 * p + c2 * m + j * std::conj(eph) * sa * zz;
      z[i] = (-0.5 * j * std::conj(eph) * sa * p + 0.5 * j * eph * sa * m + ca * zz).real();
    }
    double const te = schedule.te_ms[static_cast<std::size_t>(t)];
    relax(te, active);
    signal[static_cast<std::size_t>(t)] = fp[0];
    relax(schedule.tr_ms[static_cast<std::size_t>(t)] - te, active);
#ifndef NDEBUG
    for (Index k = 0; k < active; ++k) {
      auto const i = static_cast<std::size_t>(k);
      assert(std::abs(fp[i]) <= 1 + 1e-9 && std::abs(fm[i]) <= 1 + 1e-9 && std::abs(z[i]) <= 1 + 1e-9);
    }
#endif
    fm[static_cast<std::size_t>(active)] = 0;
    Index const top = std::min(active, cap - 1);
    for (Index k = top; k >= 1; --k) { fp[static_cast<std::size_t>(k)] = fp[static_cast<std::size_t>(k - 1)]; }
    for (Index k = 0; k < active; ++k) { fm[static_cast<std::size_t>(k)] = fm[static_cast<std::size_t>(k + 1)]; }
    fp[0] = std::conj(fm[0]);
    if (active < cap) { z[static_cast<std::size_t>(active)] = 0; }
    live = std::min(active + 1, cap);
  }
  return signal;
}

auto simulate_tissue_signals(std::vector<TissueSpec> const &tissues,
                             SequenceSchedule const &schedule,
                             EpgOptions const &options) -> std::vector<TissueSignal>
{
  schedule.validate();
  std::vector<TissueSignal> out;
  for (auto const &t : tissues) {
    if (t.is_void()) {
      out.push_back({t.label, std::vector<Cxd>(static_cast<std::size_t>(schedule.n_timepoints()))});
    } else {
      out.push_back({t.label, simulate_signal(t.t1_ms, t.t2_ms, schedule, options)});
    }
  }
  return out;
}

auto Dictionary::find(double t1, double t2) const -> Index
{
  for (Index e = 0; e < entry_count(); ++e) {
    if (t1_ms[static_cast<std::size_t>(e)] == t1 && t2_ms[static_cast<std::size_t>(e)] == t2) { return e; }
  }
  return -1;
}

auto build_dictionary(std::vector<double> const &t1_grid,
                      std::vector<double> const &t2_grid,
                      SequenceSchedule const &schedule,
                      Exec exec,
                      EpgOptions const &options) -> Dictionary
{
  if (t1_grid.empty() || t2_grid.empty()) { throw std::invalid_argument("dictionary grids must be nonempty"); }
  if (!std::is_sorted(t1_grid.begin(), t1_grid.end()) || !std::is_sorted(t2_grid.begin(), t2_grid.end())) {
    throw std::invalid_argument("dictionary grids must be ascending");
  }
  schedule.validate();
  Dictionary dict;
  dict.n_timepoints = schedule.n_timepoints();
  dict.schedule_hash = schedule.hash();
  for (auto t1 : t1_grid) {
    for (auto t2 : t2_grid) {
      if (t2 <= t1 && t1 > 0 && t2 > 0) {
        dict.t1_ms.push_back(t1);
        dict.t2_ms.push_back(t2);
      }
    }
  }
  if (dict.t1_ms.empty()) { throw std::invalid_argument("dictionary grid has no entry with 0 < t2 <= t1"); }
  auto const n_entries = dict.entry_count();
  auto const nt = static_cast<std::size_t>(dict.n_timepoints);
  dict.signals.resize(static_cast<std::size_t>(n_entries) * nt);
  dict.norm_scale.resize(static_cast<std::size_t>(n_entries));

  auto fill = [&](Index e) {
    auto const i = static_cast<std::size_t>(e);
    auto const d = simulate_signal(dict.t1_ms[i], dict.t2_ms[i], schedule, options);
    double sq = 0;
    for (auto v : d) { sq += std::norm(v); }
    double const norm = std::sqrt(sq);
    dict.norm_scale[i] = norm;
    double const inv = norm > 0 ? 1.0 / norm : 0.0;
    for (std::size_t t = 0; t < nt; ++t) { dict.signals[i * nt + t] = Cx(d[t] * inv); }
  };
  if (exec == Exec::Serial) {
    for (Index e = 0; e < n_entries; ++e) { fill(e); }
  } else {
#pragma omp parallel for schedule(dynamic, 4)
    for (Index e = 0; e < n_entries; ++e) { fill(e); }
  }
  return dict;
}

auto default_fisp_schedule(Index n_timepoints, double flip_scale) -> SequenceSchedule
{
  if (n_timepoints < 1) { throw std::invalid_argument("default schedule needs at least one timepoint"); }
  constexpr double kFloor = 5.0;
  constexpr std::array<double, 4> kLobes{65, 35, 55, 30};
  auto const n = static_cast<double>(n_timepoints);
  SequenceSchedule s;
  for (Index t = 0; t < n_timepoints; ++t) {
    double const u = 4.0 * static_cast<double>(t) / n;
    auto const lobe = std::min<std::size_t>(static_cast<std::size_t>(u), 3);
    double const f = u - static_cast<double>(lobe);
    s.flip_deg.push_back(kFloor + flip_scale * kLobes[lobe] * std::sin(std::numbers::pi * f));
    s.tr_ms.push_back(13.0 + 2.0 * std::sin(2 * std::numbers::pi * static_cast<double>(t) / 150.0 + 0.3));
  }
  double const te = 0.5 * *std::min_element(s.tr_ms.begin(), s.tr_ms.end());
  s.te_ms.assign(static_cast<std::size_t>(n_timepoints), te);
  s.inversion = {true, 20.64};
  s.validate();
  return s;
}

auto make_grid(std::vector<GridRange> const &ranges) -> std::vector<double>
{
  std::vector<double> out;
  for (auto const &r : ranges) {
    if (!(r.step > 0) || r.hi < r.lo) { throw std::invalid_argument("grid range needs step > 0 and hi >= lo"); }
    auto const count = static_cast<Index>(std::floor((r.hi - r.lo) / r.step + 1e-9));
    for (Index k = 0; k <= count; ++k) { out.push_back(r.lo + static_cast<double>(k) * r.step); }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

auto default_t1_ranges() -> std::vector<GridRange>
{
  return {{2, 10, 100}, {100, 20, 1000}, {1000, 50, 3000}};
}

auto default_t2_ranges() -> std::vector<GridRange>
{
  return {{2, 5, 100}, {100, 10, 300}, {300, 50, 2000}};
}

auto schedule_to_json(SequenceSchedule const &s) -> Json
{
  return {{"kind", "schedule"},
          {"n_timepoints", s.n_timepoints()},
          {"flip_deg", s.flip_deg},
          {"tr_ms", s.tr_ms},
          {"te_ms", s.te_ms},
          {"inversion", {{"enabled", s.inversion.enabled}, {"ti_ms", s.inversion.ti_ms}}},
          {"rf_phase_deg", s.rf_phase_deg},
          {"scan_time_ms", s.scan_time_ms()},
          {"schedule_hash", s.hash()}};
}

auto schedule_from_json(Json const &j) -> SequenceSchedule
{
  SequenceSchedule s;
  try {
    s.flip_deg = j.at("flip_deg").get<std::vector<double>>();
    s.tr_ms = j.at("tr_ms").get<std::vector<double>>();
    s.te_ms = j.at("te_ms").get<std::vector<double>>();
    s.inversion.enabled = j.at("inversion").at("enabled").get<bool>();
    s.inversion.ti_ms = j.at("inversion").at("ti_ms").get<double>();
    s.rf_phase_deg = j.value("rf_phase_deg", 0.0);
  } catch (Json::exception const &e) {
    throw FormatError(std::string("malformed schedule: ") + e.what());
  }
  try {
    s.validate();
  } catch (std::invalid_argument const &e) {
    throw FormatError(std::string("invalid schedule: ") + e.what());
  }
  if (j.contains("schedule_hash") && j["schedule_hash"] != s.hash()) {
    throw FormatError("schedule_hash does not match schedule content");
  }
  return s;
}

void save_schedule(SequenceSchedule const &s, std::string const &path, Json extra_meta)
{
  std::ofstream f(path);
  if (!f) { throw std::runtime_error("cannot write " + path); }
  f << merge_meta(schedule_to_json(s), extra_meta).dump(2) << '\n';
  if (!f) { throw std::runtime_error("write failed: " + path); }
}

auto load_schedule(std::string const &path) -> SequenceSchedule
{
  std::ifstream f(path);
  if (!f) { throw std::runtime_error("cannot read " + path); }
  Json j;
  try {
    j = Json::parse(f);
  } catch (Json::exception const &e) {
    throw FormatError(path + ": " + e.what());
  }
  return schedule_from_json(j);
}

} // namespace mrf
