#include "mrf/errors.hpp"
#include "mrf/sequence.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace mrf;

namespace {

auto short_schedule(Index n, bool inversion = true, double rf_phase = 0) -> SequenceSchedule
{
  SequenceSchedule s;
  for (Index t = 0; t < n; ++t) {
    s.flip_deg.push_back(10 + 50 * std::sin(0.37 * static_cast<double>(t) + 0.2) * std::sin(0.37 * static_cast<double>(t) + 0.2));
    s.tr_ms.push_back(12 + 2 * std::cos(0.5 * static_cast<double>(t)));
    s.te_ms.push_back(3.5);
  }
  s.inversion = {inversion, 20.64};
  s.rf_phase_deg = rf_phase;
  return s;
}

auto norm2(std::vector<Cxd> const &v) -> double
{
  double s = 0;
  for (auto x : v) { s += std::norm(x); }
  return std::sqrt(s);
}

} // namespace

TEST(Epg, MatchesIsochromatEnsembleForWhiteMatter)
{
  auto const s = short_schedule(10);
  auto const epg = simulate_signal(800, 40, s);
  auto const iso = oracle::isochromat_fisp(800, 40, s, 200);
  EXPECT_LT(oracle::relative_l2(epg, iso), 0.01);
}

TEST(Epg, MatchesIsochromatEnsembleForAllBrainTissues)
{
  for (bool inversion : {true, false}) {
    for (double phase : {0.0, 30.0}) {
      auto const s = short_schedule(24, inversion, phase);
      for (auto const &[t1, t2] : {std::pair{800.0, 40.0}, {1400.0, 60.0}, {3000.0, 500.0}}) {
        auto const epg = simulate_signal(t1, t2, s);
        auto const iso = oracle::isochromat_fisp(t1, t2, s, 256);
        EXPECT_LT(oracle::relative_l2(epg, iso), 0.01) << t1 << "/" << t2;
        // With more spins than twice the echo count the ensemble is exact.
        EXPECT_LT(oracle::relative_l2(epg, iso), 1e-9) << t1 << "/" << t2;
      }
    }
  }
}

TEST(Epg, ZeroFlipGivesZeroSignal)
{
  auto s = short_schedule(20);
  std::fill(s.flip_deg.begin(), s.flip_deg.end(), 0.0);
  for (auto v : simulate_signal(800, 40, s)) { EXPECT_EQ(v, Cxd(0, 0)); }
}

TEST(Epg, Deterministic)
{
  auto const s = default_fisp_schedule(200);
  EXPECT_EQ(simulate_signal(1400, 60, s), simulate_signal(1400, 60, s));
}

TEST(Epg, MagnitudeBounded)
{
  auto const s = default_fisp_schedule(480);
  for (auto const &[t1, t2] : {std::pair{800.0, 40.0}, {3000.0, 2000.0}, {100.0, 90.0}}) {
    for (auto v : simulate_signal(t1, t2, s)) { EXPECT_LE(std::abs(v), 1.0 + 1e-12); }
  }
}

TEST(Epg, SmoothInT1)
{
  auto const s = default_fisp_schedule(480);
  auto const a = simulate_signal(800, 40, s);
  auto const b = simulate_signal(801, 40, s);
  EXPECT_LT(oracle::relative_l2(b, a), 0.01);
  EXPECT_GT(oracle::relative_l2(b, a), 0.0);
}

TEST(Epg, StateCapTruncatesGracefully)
{
  auto const s = default_fisp_schedule(480);
  auto const exact = simulate_signal(800, 40, s);
  // Transverse coherence dies within a few T2; 60 states are plenty for T2 = 40 ms.
  auto const capped = simulate_signal(800, 40, s, {60});
  EXPECT_LT(oracle::relative_l2(capped, exact), 1e-6);
  EXPECT_EQ(simulate_signal(800, 40, s, {481}), exact);
}

TEST(Epg, InvalidRelaxation)
{
  auto const s = short_schedule(5);
  EXPECT_THROW(simulate_signal(0, 40, s), std::invalid_argument);
  EXPECT_THROW(simulate_signal(800, -1, s), std::invalid_argument);
}

TEST(Epg, VoidTissueIsZero)
{
  auto const s = short_schedule(12);
  auto const sig = simulate_tissue_signals({{"skull", 0, 0}, {"wm", 800, 40}}, s);
  ASSERT_EQ(sig.size(), 2u);
  for (auto v : sig[0].d) { EXPECT_EQ(v, Cxd(0, 0)); }
  EXPECT_EQ(sig[1].d, simulate_signal(800, 40, s));
}

TEST(Schedule, Validation)
{
  auto s = short_schedule(4);
  EXPECT_NO_THROW(s.validate());
  auto bad = s;
  bad.flip_deg[1] = 95;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = s;
  bad.te_ms[2] = bad.tr_ms[2];
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = s;
  bad.tr_ms.pop_back();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_THROW(SequenceSchedule{}.validate(), std::invalid_argument);
}

TEST(Schedule, ScanTime)
{
  SequenceSchedule s;
  s.flip_deg.assign(480, 30);
  s.tr_ms.assign(480, 12);
  s.te_ms.assign(480, 2);
  s.inversion.enabled = false;
  EXPECT_DOUBLE_EQ(s.scan_time_ms(), 5760.0);
  s.inversion = {true, 20.64};
  EXPECT_DOUBLE_EQ(s.scan_time_ms(), 5780.64);
}

TEST(Schedule, DefaultFispBoundsAndSmoothness)
{
  auto const s = default_fisp_schedule(480);
  ASSERT_EQ(s.n_timepoints(), 480);
  EXPECT_EQ(s.tr_ms.size(), 480u);
  EXPECT_TRUE(s.inversion.enabled);
  EXPECT_DOUBLE_EQ(s.inversion.ti_ms, 20.64);
  for (Index t = 0; t < 480; ++t) {
    auto const i = static_cast<std::size_t>(t);
    EXPECT_GE(s.flip_deg[i], 5.0);
    EXPECT_LE(s.flip_deg[i], 70.0);
    EXPECT_GE(s.tr_ms[i], 11.0);
    EXPECT_LE(s.tr_ms[i], 15.0);
    if (t > 0) { EXPECT_LE(std::abs(s.flip_deg[i] - s.flip_deg[i - 1]), 5.0); }
  }
  EXPECT_NEAR(*std::max_element(s.flip_deg.begin(), s.flip_deg.end()), 70.0, 0.1);
  EXPECT_EQ(s.hash(), default_fisp_schedule(480).hash());
}

TEST(Schedule, JsonRoundTrip)
{
  testutil::TempDir dir;
  auto const s = default_fisp_schedule(96);
  save_schedule(s, dir.file("s.json"));
  auto const t = load_schedule(dir.file("s.json"));
  EXPECT_EQ(t.flip_deg, s.flip_deg);
  EXPECT_EQ(t.tr_ms, s.tr_ms);
  EXPECT_EQ(t.te_ms, s.te_ms);
  EXPECT_EQ(t.hash(), s.hash());
  auto j = schedule_to_json(s);
  j["flip_deg"][3] = 120.0;
  j.erase("schedule_hash");
  EXPECT_THROW(schedule_from_json(j), FormatError);
}

TEST(DictionaryGrid, DefaultRanges)
{
  auto const t1 = make_grid(default_t1_ranges());
  auto const t2 = make_grid(default_t2_ranges());
  EXPECT_EQ(t1.size(), 96u);
  EXPECT_EQ(t2.size(), 75u);
  EXPECT_EQ(t1.front(), 2);
  EXPECT_EQ(t1.back(), 3000);
  EXPECT_EQ(t2.front(), 2);
  EXPECT_EQ(t2.back(), 2000);
  EXPECT_TRUE(std::is_sorted(t1.begin(), t1.end()));
  EXPECT_EQ(std::adjacent_find(t1.begin(), t1.end()), t1.end());
}

TEST(Dictionary, EntriesAreFeasibleAndUnitNorm)
{
  auto const s = default_fisp_schedule(120);
  auto const d = build_dictionary({100, 800, 1400}, {40, 60, 500, 1000}, s);
  EXPECT_EQ(d.entry_count(), 9);
  EXPECT_EQ(d.n_timepoints, 120);
  for (Index e = 0; e < d.entry_count(); ++e) {
    EXPECT_LE(d.t2_ms[static_cast<std::size_t>(e)], d.t1_ms[static_cast<std::size_t>(e)]);
    double n = 0;
    for (auto v : d.signal(e)) { n += std::norm(Cxd(v)); }
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
  }
  EXPECT_EQ(d.schedule_hash, s.hash());
}

TEST(Dictionary, NormScaleRecoversSignal)
{
  auto const s = default_fisp_schedule(480);
  auto const d = build_dictionary({700, 800, 900}, {30, 40, 50}, s);
  auto const e = d.find(800, 40);
  ASSERT_GE(e, 0);
  auto const ref = simulate_signal(800, 40, s);
  EXPECT_DOUBLE_EQ(d.norm_scale[static_cast<std::size_t>(e)], norm2(ref));
  std::vector<Cxd> rebuilt;
  for (auto v : d.signal(e)) { rebuilt.push_back(Cxd(v) * d.norm_scale[static_cast<std::size_t>(e)]); }
  // Signals are stored in single precision.
  EXPECT_LT(oracle::relative_l2(rebuilt, ref), 1e-6);
}

TEST(Dictionary, InfeasibleGrid)
{
  auto const s = default_fisp_schedule(10);
  EXPECT_THROW(build_dictionary({1000}, {2000}, s), std::invalid_argument);
  EXPECT_THROW(build_dictionary({}, {20}, s), std::invalid_argument);
  EXPECT_THROW(build_dictionary({200, 100}, {20}, s), std::invalid_argument);
  auto const d = build_dictionary({1000, 3000}, {2000}, s);
  EXPECT_EQ(d.entry_count(), 1);
  EXPECT_EQ(d.t1_ms[0], 3000);
}

TEST(Dictionary, SerialAndParallelIdentical)
{
  auto const s = default_fisp_schedule(96);
  auto const t1 = make_grid({{100, 100, 2000}});
  auto const t2 = make_grid({{20, 20, 400}});
  auto const a = build_dictionary(t1, t2, s, Exec::Serial);
  auto const b = build_dictionary(t1, t2, s, Exec::Parallel);
  EXPECT_EQ(a.signals, b.signals);
  EXPECT_EQ(a.norm_scale, b.norm_scale);
  EXPECT_EQ(a.t1_ms, b.t1_ms);
}
