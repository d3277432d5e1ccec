#include "mrf/config.hpp"
#include "mrf/errors.hpp"
#include "mrf/formats.hpp"
#include "mrf/instrument.hpp"
#include "mrf/render.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace mrf;

struct Global
{
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<Index> threads;
};

auto resolve_config(Global const &g) -> RunConfig
{
  auto path = g.config_path;
  if (path.empty()) {
    if (char const *env = std::getenv("MRFSIM_CONFIG")) { path = env; }
  }
  auto c = path.empty() ? RunConfig{} : load_config(path);
  if (g.seed) {
    c.seed = *g.seed;
    c.anneal.rng_seed = *g.seed;
  }
  if (g.threads) {
    if (*g.threads < 0) { throw std::invalid_argument("--threads must be >= 0"); }
    c.threads = *g.threads;
  }
  if (c.threads > 0) { omp_set_num_threads(static_cast<int>(c.threads)); }
  return c;
}

auto provenance(RunConfig const &c, std::string const &command) -> Json
{
  return {{"config", config_to_json(c)}, {"command", command}};
}

void emit(Json const &j, std::string const &path = {})
{
  std::cout << j.dump(2) << '\n';
  if (!path.empty()) {
    std::ofstream f(path);
    if (!f) { throw std::runtime_error("cannot write " + path); }
    f << j.dump(2) << '\n';
  }
}

auto elapsed_ms(std::chrono::steady_clock::time_point t0) -> double
{
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

auto schedule_for(std::string const &path, RunConfig const &c) -> SequenceSchedule
{
  return path.empty() ? default_schedule(c) : load_schedule(path);
}

auto optional_phase(std::string const &path) -> std::unique_ptr<PhaseMap>
{
  if (path.empty()) { return nullptr; }
  return std::make_unique<PhaseMap>(load_phase_map(path));
}

auto parse_window(std::string const &text) -> std::pair<double, double>
{
  auto const comma = text.find(',');
  if (comma == std::string::npos) { throw std::invalid_argument("window must be lo,hi: " + text); }
  return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
}

/// Label order for the cost: the weighted tissues.
auto weighted_labels(RunConfig const &c) -> std::vector<std::string>
{
  std::vector<std::string> out;
  for (auto const &[label, w] : c.cost.weights) { out.push_back(label); }
  return out;
}

// ---------------------------------------------------------------------------

struct PhantomArgs
{
  std::string out, phase_out;
};

void run_phantom(RunConfig const &c, PhantomArgs const &a)
{
  auto const ph = build_phantom(c);
  save_phantom(ph, a.out, provenance(c, "phantom"));
  Json summary = {{"phantom", a.out}, {"phantom_hash", ph.hash()}, {"tissues", ph.tissue_count()}};
  if (!a.phase_out.empty()) {
    auto const phase = build_phase_map(c);
    if (!phase) { throw std::invalid_argument("--phase-out given but phase.enabled is false"); }
    save_phase_map(*phase, a.phase_out, provenance(c, "phantom"));
    summary["phase"] = a.phase_out;
    summary["phase_hash"] = phase->hash();
  }
  emit(summary);
}

struct TrajArgs
{
  std::string out;
};

void run_traj(RunConfig const &c, TrajArgs const &a)
{
  auto const spiral = build_spiral(c);
  save_spiral_set(spiral, a.out, provenance(c, "traj"));
  emit({{"spiral", a.out},
        {"spiral_hash", spiral.hash()},
        {"n_interleaves", spiral.n_interleaves()},
        {"readout_len", spiral.readout_len}});
}

struct SrfArgs
{
  std::string phantom, spiral, phase, out;
};

void run_srf(RunConfig const &c, SrfArgs const &a)
{
  auto const ph = load_phantom(a.phantom);
  auto const spiral = load_spiral_set(a.spiral);
  auto const phase = optional_phase(a.phase);
  auto const t0 = std::chrono::steady_clock::now();
  auto const set = compute_spatial_responses(ph, spiral, phase.get(), srf_options(c));
  double const ms = elapsed_ms(t0);
  save_spatial_responses(set, a.out, provenance(c, "srf"));
  emit({{"srf", a.out},
        {"tissues", set.tissue_count()},
        {"n_interleaves", set.n_interleaves},
        {"precompute_ms", ms},
        {"phase_hash", set.binding.phase_hash}});
}

struct DictArgs
{
  std::string phantom, schedule, schedule_out, out;
};

void run_dict(RunConfig const &c, DictArgs const &a)
{
  std::vector<TissueSpec> tissues;
  if (!a.phantom.empty()) { tissues = load_phantom(a.phantom).tissues(); }
  auto const schedule = schedule_for(a.schedule, c);
  auto const [t1, t2] = dictionary_grids(c, tissues);
  auto const dict = build_dictionary(t1, t2, schedule, Exec::Parallel, epg_options(c));
  save_dictionary(dict, a.out, provenance(c, "dict"));
  if (!a.schedule_out.empty()) { save_schedule(schedule, a.schedule_out, provenance(c, "dict")); }
  emit({{"dictionary", a.out}, {"entries", dict.entry_count()}, {"n_timepoints", dict.n_timepoints}, {"schedule_hash", dict.schedule_hash}});
}

struct SimulateArgs
{
  std::string method = "fast";
  std::string phantom, srf, spiral, phase, schedule, out;
};

void run_simulate(RunConfig const &c, SimulateArgs const &a)
{
  auto const ph = load_phantom(a.phantom);
  auto const phase = optional_phase(a.phase);
  auto const schedule = schedule_for(a.schedule, c);
  auto const signals = simulate_tissue_signals(ph.tissues(), schedule, epg_options(c));
  auto meta = provenance(c, "simulate");
  counters().reset();

  ImageSeries series;
  if (a.method == "fast") {
    if (a.srf.empty()) { throw std::invalid_argument("--method fast needs --srf"); }
    SpatialResponseSet srf;
    if (!a.spiral.empty()) {
      srf = load_spatial_responses(a.srf, binding_for(ph, load_spiral_set(a.spiral), phase.get(), srf_options(c)));
    } else {
      srf = load_spatial_responses(a.srf);
      if (srf.binding.phantom_hash != ph.hash()) {
        throw CacheInvalidError(a.srf + ": spatial responses were computed for a different phantom");
      }
      if (phase && srf.binding.phase_hash != phase->hash()) {
        throw CacheInvalidError(a.srf + ": spatial responses were computed with a different phase map");
      }
    }
    series = simulate_fast(srf, signals);
  } else if (a.method == "conventional") {
    if (a.spiral.empty()) { throw std::invalid_argument("--method conventional needs --spiral"); }
    series = simulate_conventional(ph, signals, load_spiral_set(a.spiral), phase.get(), srf_options(c));
  } else if (a.method == "gaussian") {
    series = compose_series(ph, simulate_gaussian_model(signals, c.snr_db, c.seed), phase.get(), "gaussian");
    meta["snr_db"] = c.snr_db;
  } else {
    throw std::invalid_argument("unknown method '" + a.method + "' (expected fast, conventional or gaussian)");
  }
  series.schedule_hash = schedule.hash();
  save_series(series, a.out, meta);
  emit({{"series", a.out},
        {"method", series.method},
        {"frames", series.n_timepoints()},
        {"nufft_calls", counters().nufft_total()},
        {"srf_precompute", counters().srf_precompute.load()}});
}

struct MatchArgs
{
  std::string series, dict, out;
};

void run_match(RunConfig const &c, MatchArgs const &a)
{
  auto const series = load_series(a.series);
  auto const dict = load_dictionary(a.dict);
  auto const maps = match_series(series, dict, c.match);
  auto meta = provenance(c, "match");
  meta["phantom_hash"] = series.phantom_hash;
  meta["schedule_hash"] = series.schedule_hash;
  meta["series_method"] = series.method;
  save_maps(maps, a.out, meta);
  Index matched = 0;
  for (auto v : maps.match_mask.values()) { matched += v; }
  emit({{"maps", a.out}, {"matched_pixels", matched}, {"pixels", maps.t1.size()}});
}

struct CostArgs
{
  std::string maps, phantom, schedule, out;
};

void run_cost(RunConfig const &c, CostArgs const &a)
{
  auto const ph = load_phantom(a.phantom);
  auto const header = read_tensor_header(a.maps);
  auto const maps = load_maps(a.maps);
  auto const schedule = schedule_for(a.schedule, c);
  auto const recorded_phantom = header.meta.value("phantom_hash", "");
  if (!recorded_phantom.empty() && recorded_phantom != ph.hash()) {
    throw CacheInvalidError(a.maps + ": maps were produced from a different phantom");
  }
  auto const recorded_schedule = header.meta.value("schedule_hash", "");
  if (!recorded_schedule.empty() && recorded_schedule != schedule.hash()) {
    throw CacheInvalidError(a.maps + ": maps were produced with a different schedule");
  }
  auto const errors = compute_segment_rmse(maps, ph, weighted_labels(c));
  std::optional<std::map<std::string, double>> qf;
  if (c.cost.qf_weight > 0) { qf = quality_factor_proxy(simulate_tissue_signals(ph.tissues(), schedule, epg_options(c))); }
  auto report = compute_cost(errors, qf, schedule, c.cost).to_json();
  report["config"] = config_to_json(c);
  emit(report, a.out);
}

struct OptimizeArgs
{
  std::string phantom, spiral, phase, srf, out, trace, report;
  std::optional<Index> iterations;
};

void run_optimize(RunConfig c, OptimizeArgs const &a)
{
  if (a.iterations) { c.anneal.max_iterations = *a.iterations; }
  c.anneal.validate();
  auto const ph = load_phantom(a.phantom);
  auto const spiral = load_spiral_set(a.spiral);
  auto const phase = optional_phase(a.phase);
  counters().reset();
  auto const srf = a.srf.empty() ? compute_spatial_responses(ph, spiral, phase.get(), srf_options(c))
                                 : load_spatial_responses(a.srf, binding_for(ph, spiral, phase.get(), srf_options(c)));

  std::vector<double> t1x, t2x;
  for (auto const &t : ph.tissues()) {
    if (t.is_void()) { continue; }
    t1x.push_back(t.t1_ms);
    t2x.push_back(t.t2_ms);
  }
  ObjectiveContext ctx;
  ctx.srf = &srf;
  ctx.phantom = &ph;
  ctx.dict_t1 = log_grid(c.opt_t1_lo, c.opt_t1_hi, c.opt_t1_count, t1x);
  ctx.dict_t2 = log_grid(c.opt_t2_lo, c.opt_t2_hi, c.opt_t2_count, t2x);
  ctx.expansion = {c.n_timepoints, c.inversion, c.rf_phase_deg};
  ctx.cost = c.cost;
  ctx.match = c.match;
  ctx.epg = epg_options(c);

  auto start = default_schedule_params(c.n_segments, c.n_timepoints);
  start.bounds = c.bounds;
  start.clamp();
  auto const nufft_before = counters().nufft_total();
  auto const t0 = std::chrono::steady_clock::now();
  auto const result = anneal(start, make_objective(ctx), c.anneal);
  double const ms = elapsed_ms(t0);
  auto const nufft_during = counters().nufft_total() - nufft_before;

  if (!a.trace.empty()) {
    write_trace_csv(result.trace, a.trace, {{"anneal", c.anneal.to_json()}, {"config", config_to_json(c)}});
  }
  Json summary = {{"iterations", result.trace.size()},
                  {"best_cost", result.best_cost},
                  {"aborted", result.aborted},
                  {"anneal_ms", ms},
                  {"srf_precompute", counters().srf_precompute.load()},
                  {"nufft_calls_during_anneal", nufft_during}};
  if (result.aborted) {
    summary["error"] = result.error;
    emit(summary, a.report);
    throw std::runtime_error("annealing aborted: " + result.error);
  }

  auto const best = expand(result.best_params, ctx.expansion);
  auto meta = provenance(c, "optimize");
  meta["best_cost"] = result.best_cost;
  save_schedule(best, a.out, meta);

  // The winner is re-scored against the full dictionary grid.
  auto final_ctx = ctx;
  std::tie(final_ctx.dict_t1, final_ctx.dict_t2) = dictionary_grids(c, ph.tissues());
  summary["final"] = evaluate_objective(result.best_params, final_ctx).report.to_json();
  summary["schedule"] = a.out;
  summary["config"] = config_to_json(c);
  emit(summary, a.report);
}

struct BenchArgs
{
  Index reps = 3;
  std::string out;
};

void run_bench(RunConfig const &c, BenchArgs const &a)
{
  auto const ph = build_phantom(c);
  auto const spiral = build_spiral(c);
  auto const phase = build_phase_map(c);
  auto report = benchmark(ph, spiral, phase.get(), default_schedule(c), srf_options(c), a.reps).to_json();
  report["run_config"] = config_to_json(c);
  report["threads"] = omp_get_max_threads();
  emit(report, a.out);
}

struct RenderArgs
{
  std::string maps, series, out_dir;
  std::string t1_window = "0,3000";
  std::string t2_window = "0,300";
  std::string m0_window;
  Index frame = 0;
};

void run_render(RunConfig const &, RenderArgs const &a)
{
  if (a.maps.empty() && a.series.empty()) { throw std::invalid_argument("render needs --maps or --series"); }
  std::filesystem::create_directories(a.out_dir);
  auto const dir = std::filesystem::path(a.out_dir);
  Json written = Json::array();
  auto const put = [&](RealGrid const &img, std::string const &name, std::pair<double, double> w) {
    written.push_back(write_pgm(img, (dir / name).string(), w.first, w.second));
    auto const csv = (dir / (name + ".csv")).string();
    write_csv(img, csv);
    written.push_back(csv);
  };
  auto const auto_window = [](RealGrid const &img) {
    float hi = 0;
    for (auto v : img.values()) { hi = std::max(hi, v); }
    return std::pair<double, double>{0.0, hi > 0 ? static_cast<double>(hi) : 1.0};
  };
  if (!a.maps.empty()) {
    auto const maps = load_maps(a.maps);
    put(maps.t1, "t1", parse_window(a.t1_window));
    put(maps.t2, "t2", parse_window(a.t2_window));
    put(maps.m0, "m0", a.m0_window.empty() ? auto_window(maps.m0) : parse_window(a.m0_window));
  }
  if (!a.series.empty()) {
    auto const series = load_series(a.series);
    if (a.frame < 0 || a.frame >= series.n_timepoints()) { throw std::invalid_argument("--frame out of range"); }
    auto const &f = series.frames[static_cast<std::size_t>(a.frame)];
    RealGrid mag(f.shape());
    for (Index p = 0; p < f.size(); ++p) { mag[p] = std::abs(f[p]); }
    put(mag, "frame" + std::to_string(a.frame), auto_window(mag));
  }
  emit({{"written", written}});
}

} // namespace

auto main(int argc, char **argv) -> int
{
  CLI::App app{"mrfsim: fast MR fingerprinting image-series simulator"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--config", g.config_path, "JSON run config (default: $MRFSIM_CONFIG, then built-in defaults)");
  app.add_option("--seed", g.seed, "Override the run seed");
  app.add_option("--threads", g.threads, "OpenMP threads (0: runtime default)");

  PhantomArgs phantom;
  auto *sp = app.add_subcommand("phantom", "Build the configured phantom (and phase map)");
  sp->add_option("-o,--out", phantom.out)->required();
  sp->add_option("--phase-out", phantom.phase_out);

  TrajArgs traj;
  auto *st = app.add_subcommand("traj", "Generate the spiral set and density compensation");
  st->add_option("-o,--out", traj.out)->required();

  SrfArgs srf;
  auto *ss = app.add_subcommand("srf", "Precompute spatial response functions");
  ss->add_option("--phantom", srf.phantom)->required();
  ss->add_option("--spiral", srf.spiral)->required();
  ss->add_option("--phase", srf.phase);
  ss->add_option("-o,--out", srf.out)->required();

  DictArgs dict;
  auto *sd = app.add_subcommand("dict", "Build a dictionary for a schedule");
  sd->add_option("--phantom", dict.phantom, "Add this phantom's tissue values to the grids");
  sd->add_option("--schedule", dict.schedule, "Schedule JSON (default: configured FISP schedule)");
  sd->add_option("--schedule-out", dict.schedule_out);
  sd->add_option("-o,--out", dict.out)->required();

  SimulateArgs sim;
  auto *sm = app.add_subcommand("simulate", "Simulate an image series");
  sm->add_option("--method", sim.method)->check(CLI::IsMember({"fast", "conventional", "gaussian"}));
  sm->add_option("--phantom", sim.phantom)->required();
  sm->add_option("--srf", sim.srf);
  sm->add_option("--spiral", sim.spiral);
  sm->add_option("--phase", sim.phase);
  sm->add_option("--schedule", sim.schedule);
  sm->add_option("-o,--out", sim.out)->required();

  MatchArgs match;
  auto *sma = app.add_subcommand("match", "Match a series against a dictionary");
  sma->add_option("--series", match.series)->required();
  sma->add_option("--dict", match.dict)->required();
  sma->add_option("-o,--out", match.out)->required();

  CostArgs cost;
  auto *sc = app.add_subcommand("cost", "Score quantitative maps against the phantom");
  sc->add_option("--maps", cost.maps)->required();
  sc->add_option("--phantom", cost.phantom)->required();
  sc->add_option("--schedule", cost.schedule);
  sc->add_option("-o,--out", cost.out);

  OptimizeArgs opt;
  auto *so = app.add_subcommand("optimize", "Anneal the sequence schedule");
  so->add_option("--phantom", opt.phantom)->required();
  so->add_option("--spiral", opt.spiral)->required();
  so->add_option("--phase", opt.phase);
  so->add_option("--srf", opt.srf, "Reuse precomputed spatial responses");
  so->add_option("--iterations", opt.iterations);
  so->add_option("--trace", opt.trace);
  so->add_option("--report", opt.report);
  so->add_option("-o,--out", opt.out)->required();

  BenchArgs bench;
  auto *sb = app.add_subcommand("bench", "Time fast against conventional simulation");
  sb->add_option("--reps", bench.reps)->check(CLI::PositiveNumber);
  sb->add_option("-o,--out", bench.out);

  RenderArgs render;
  auto *sr = app.add_subcommand("render", "Export maps or a series frame as PGM and CSV");
  sr->add_option("--maps", render.maps);
  sr->add_option("--series", render.series);
  sr->add_option("--frame", render.frame);
  sr->add_option("--t1-window", render.t1_window);
  sr->add_option("--t2-window", render.t2_window);
  sr->add_option("--m0-window", render.m0_window);
  sr->add_option("--out-dir", render.out_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    auto const c = resolve_config(g);
    if (sp->parsed()) { run_phantom(c, phantom); }
    if (st->parsed()) { run_traj(c, traj); }
    if (ss->parsed()) { run_srf(c, srf); }
    if (sd->parsed()) { run_dict(c, dict); }
    if (sm->parsed()) { run_simulate(c, sim); }
    if (sma->parsed()) { run_match(c, match); }
    if (sc->parsed()) { run_cost(c, cost); }
    if (so->parsed()) { run_optimize(c, opt); }
    if (sb->parsed()) { run_bench(c, bench); }
    if (sr->parsed()) { run_render(c, render); }
  } catch (std::exception const &e) {
    std::cerr << "mrfsim: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
