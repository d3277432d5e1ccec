#include "mrf/config.hpp"
#include "mrf/formats.hpp"
#include "mrf/tensor_io.hpp"
#include "test_util.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace mrf;

namespace {

struct CliResult
{
  int status = -1;
  std::string out;
  auto json() const -> Json { return Json::parse(out); }
};

class Cli : public ::testing::Test
{
protected:
  testutil::TempDir dir;

  auto f(std::string const &name) const -> std::string { return dir.file(name); }

  auto run(std::string const &args) const -> CliResult
  {
    auto const out = f("stdout.txt");
    auto const cmd = std::string(MRFSIM_PATH) + " " + args + " > " + out + " 2> " + f("stderr.txt");
    CliResult r;
    r.status = std::system(cmd.c_str());
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
  }

  void write(std::string const &name, std::string const &text) const
  {
    std::ofstream o(f(name));
    o << text;
  }

  auto bytes(std::string const &name) const -> std::string
  {
    std::ifstream in(f(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void SetUp() override
  {
    write("cfg.json", R"({"grid": 32, "sequence": {"n_timepoints": 48}, "spiral": {"n_interleaves": 12}})");
    cfg = "--config " + f("cfg.json");
    ASSERT_EQ(run(cfg + " phantom -o " + f("ph.bin") + " --phase-out " + f("phase.bin")).status, 0);
    ASSERT_EQ(run(cfg + " traj -o " + f("sp.bin")).status, 0);
  }

  std::string cfg;
};

} // namespace

TEST_F(Cli, PipelineMatchesLibrary)
{
  auto const srf = run(cfg + " srf --phantom " + f("ph.bin") + " --spiral " + f("sp.bin") + " --phase " + f("phase.bin") +
                       " -o " + f("srf.bin"));
  ASSERT_EQ(srf.status, 0);
  EXPECT_EQ(srf.json()["tissues"], 3);
  ASSERT_EQ(run(cfg + " dict --phantom " + f("ph.bin") + " -o " + f("dict.bin")).status, 0);
  auto const sim = run(cfg + " simulate --method fast --phantom " + f("ph.bin") + " --srf " + f("srf.bin") + " --spiral " +
                       f("sp.bin") + " --phase " + f("phase.bin") + " -o " + f("series.bin"));
  ASSERT_EQ(sim.status, 0);
  EXPECT_EQ(sim.json()["nufft_calls"], 0);
  EXPECT_EQ(sim.json()["srf_precompute"], 0);
  ASSERT_EQ(run(cfg + " match --series " + f("series.bin") + " --dict " + f("dict.bin") + " -o " + f("maps.bin")).status, 0);
  auto const cost = run(cfg + " cost --maps " + f("maps.bin") + " --phantom " + f("ph.bin") + " -o " + f("cost.json"));
  ASSERT_EQ(cost.status, 0);

  // Same pipeline in process.
  auto const c = load_config(f("cfg.json"));
  auto const ph = build_phantom(c);
  auto const phase = build_phase_map(c);
  auto const set = compute_spatial_responses(ph, build_spiral(c), phase.get(), srf_options(c));
  auto const schedule = default_schedule(c);
  auto series = simulate_fast(set, simulate_tissue_signals(ph.tissues(), schedule));
  series.schedule_hash = schedule.hash();
  auto const [t1, t2] = dictionary_grids(c, ph.tissues());
  auto const maps = match_series(series, build_dictionary(t1, t2, schedule), c.match);
  auto const loaded = load_maps(f("maps.bin"));
  EXPECT_EQ(loaded.t1, maps.t1);
  EXPECT_EQ(loaded.t2, maps.t2);
  auto const report = compute_cost(compute_segment_rmse(maps, ph), std::nullopt, schedule, c.cost);
  EXPECT_NEAR(cost.json()["total_cost"].get<double>(), report.total_cost, 1e-12);

  // Every output embeds the resolved config.
  for (auto const *name : {"ph.bin", "sp.bin", "srf.bin", "dict.bin", "series.bin", "maps.bin"}) {
    auto const h = read_tensor_header(f(name));
    EXPECT_EQ(h.meta.at("config"), config_to_json(c)) << name;
  }
}

TEST_F(Cli, ConventionalAgreesWithFast)
{
  ASSERT_EQ(run(cfg + " srf --phantom " + f("ph.bin") + " --spiral " + f("sp.bin") + " -o " + f("srf.bin")).status, 0);
  ASSERT_EQ(run(cfg + " simulate --phantom " + f("ph.bin") + " --srf " + f("srf.bin") + " -o " + f("fast.bin")).status, 0);
  auto const conv = run(cfg + " simulate --method conventional --phantom " + f("ph.bin") + " --spiral " + f("sp.bin") +
                        " -o " + f("conv.bin"));
  ASSERT_EQ(conv.status, 0);
  EXPECT_EQ(conv.json()["nufft_calls"], 96);
  auto const a = load_series(f("fast.bin"));
  auto const b = load_series(f("conv.bin"));
  ASSERT_EQ(a.n_timepoints(), b.n_timepoints());
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    double num = 0, den = 0;
    for (Index p = 0; p < a.shape.size(); ++p) {
      num += std::norm(Cxd(a.frames[t][p]) - Cxd(b.frames[t][p]));
      den += std::norm(Cxd(b.frames[t][p]));
    }
    EXPECT_LT(std::sqrt(num / den), 1e-6);
  }
}

TEST_F(Cli, SeededRunsAreByteIdentical)
{
  auto const args = " simulate --method gaussian --phantom " + f("ph.bin") + " --phase " + f("phase.bin") + " -o ";
  ASSERT_EQ(run(cfg + " --seed 5" + args + f("a.bin")).status, 0);
  ASSERT_EQ(run(cfg + " --seed 5" + args + f("b.bin")).status, 0);
  ASSERT_EQ(run(cfg + " --seed 6" + args + f("c.bin")).status, 0);
  EXPECT_EQ(bytes("a.bin"), bytes("b.bin"));
  EXPECT_NE(bytes("a.bin"), bytes("c.bin"));
}

TEST_F(Cli, StaleInputsRejected)
{
  ASSERT_EQ(run(cfg + " srf --phantom " + f("ph.bin") + " --spiral " + f("sp.bin") + " -o " + f("srf.bin")).status, 0);
  // Ψ was computed without the phase map.
  EXPECT_NE(run(cfg + " simulate --phantom " + f("ph.bin") + " --srf " + f("srf.bin") + " --spiral " + f("sp.bin") +
                " --phase " + f("phase.bin") + " -o " + f("x.bin"))
              .status,
            0);
  write("eleven.json", R"({"grid": 32, "phantom": "eleven"})");
  ASSERT_EQ(run("--config " + f("eleven.json") + " phantom -o " + f("ph11.bin")).status, 0);
  EXPECT_NE(run(cfg + " simulate --phantom " + f("ph11.bin") + " --srf " + f("srf.bin") + " -o " + f("x.bin")).status, 0);

  // Flip one payload byte.
  auto data = bytes("srf.bin");
  data[data.size() - 3] ^= 0x40;
  write("tampered.bin", data);
  EXPECT_NE(run(cfg + " simulate --phantom " + f("ph.bin") + " --srf " + f("tampered.bin") + " -o " + f("x.bin")).status, 0);
}

TEST_F(Cli, ConfigErrorsAndEnvironment)
{
  write("bad.json", R"({"grid": 32, "spirals": {}})");
  EXPECT_NE(run("--config " + f("bad.json") + " traj -o " + f("x.bin")).status, 0);
  EXPECT_NE(run(cfg + " simulate --method magic --phantom " + f("ph.bin") + " -o " + f("x.bin")).status, 0);
  EXPECT_NE(run(cfg + " frobnicate").status, 0);

  write("env.json", R"({"grid": 16})");
  ::setenv("MRFSIM_CONFIG", f("env.json").c_str(), 1);
  auto const r = run("phantom -o " + f("env.bin"));
  ::unsetenv("MRFSIM_CONFIG");
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(read_tensor_header(f("env.bin")).shape, (std::vector<Index>{3, 16, 16}));
}

TEST_F(Cli, RenderWritesWindowedImages)
{
  ASSERT_EQ(run(cfg + " srf --phantom " + f("ph.bin") + " --spiral " + f("sp.bin") + " -o " + f("srf.bin")).status, 0);
  ASSERT_EQ(run(cfg + " dict --phantom " + f("ph.bin") + " -o " + f("dict.bin")).status, 0);
  ASSERT_EQ(run(cfg + " simulate --phantom " + f("ph.bin") + " --srf " + f("srf.bin") + " -o " + f("s.bin")).status, 0);
  ASSERT_EQ(run(cfg + " match --series " + f("s.bin") + " --dict " + f("dict.bin") + " -o " + f("maps.bin")).status, 0);
  auto const r = run(cfg + " render --maps " + f("maps.bin") + " --t1-window 0,4000 --m0-window 0,2 --series " +
                     f("s.bin") + " --frame 3 --out-dir " + f("img"));
  ASSERT_EQ(r.status, 0);
  for (auto const *name : {"img/t1_w0_4000.pgm", "img/t2_w0_300.pgm", "img/m0_w0_2.pgm", "img/t1.csv", "img/frame3.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(f(name))) << name;
  }
  EXPECT_EQ(bytes("img/t1_w0_4000.pgm").substr(0, 3), "P5\n");
}

TEST_F(Cli, OptimizeComputesResponsesOnce)
{
  write("opt.json", R"({"grid": 32, "sequence": {"n_timepoints": 48}, "spiral": {"n_interleaves": 12},
                         "optimizer": {"n_segments": 8}, "anneal": {"steps_per_temp": 2}})");
  auto const r = run("--config " + f("opt.json") + " optimize --phantom " + f("ph.bin") + " --spiral " + f("sp.bin") +
                     " --phase " + f("phase.bin") + " --iterations 6 --trace " + f("trace.csv") + " -o " + f("best.json"));
  ASSERT_EQ(r.status, 0);
  auto const j = r.json();
  EXPECT_EQ(j["iterations"], 6);
  EXPECT_EQ(j["srf_precompute"], 1);
  EXPECT_EQ(j["nufft_calls_during_anneal"], 0);
  EXPECT_TRUE(j["final"].contains("total_cost"));
  auto const best = load_schedule(f("best.json"));
  EXPECT_EQ(best.n_timepoints(), 48);
  std::ifstream trace(f("trace.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(trace, line)) { ++lines; }
  EXPECT_EQ(lines, 8);
}
