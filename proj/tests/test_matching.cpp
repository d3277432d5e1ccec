#include "mrf/matching.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace mrf;

namespace {

auto coarse_dictionary(Index nt = 200) -> Dictionary
{
  return build_dictionary(make_grid({{100, 100, 2000}}), make_grid({{10, 30, 400}}), default_fisp_schedule(nt));
}

auto entry_signal(Dictionary const &d, Index e) -> std::vector<Cxd>
{
  std::vector<Cxd> out;
  for (auto v : d.signal(e)) { out.push_back(Cxd(v) * d.norm_scale[static_cast<std::size_t>(e)]); }
  return out;
}

/// Series of `n` pixels whose pixel p carries signal(p).
template <typename F>
auto make_series(Shape2 shape, Index nt, std::string const &schedule_hash, F signal) -> ImageSeries
{
  ImageSeries s;
  s.shape = shape;
  s.schedule_hash = schedule_hash;
  s.frames.assign(static_cast<std::size_t>(nt), CxGrid(shape));
  for (Index p = 0; p < shape.size(); ++p) {
    auto const d = signal(p);
    for (Index t = 0; t < nt; ++t) { s.frames[static_cast<std::size_t>(t)][p] = Cx(d[static_cast<std::size_t>(t)]); }
  }
  return s;
}

/// Sorted grid values around `v`, with `v` itself inserted.
auto neighbourhood(std::vector<double> grid, double v, double lo, double hi) -> std::vector<double>
{
  std::erase_if(grid, [&](double x) { return x < lo || x > hi; });
  grid.push_back(v);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

auto step_index(std::vector<double> const &grid, double v) -> Index
{
  return std::lower_bound(grid.begin(), grid.end(), v) - grid.begin();
}

} // namespace

TEST(Matching, SelfMatch)
{
  auto const d = coarse_dictionary();
  auto const e = d.find(800, 400);
  ASSERT_GE(e, 0);
  auto const r = match_signal(entry_signal(d, e), d);
  EXPECT_EQ(r.entry, e);
  EXPECT_EQ(r.t1_ms, 800);
  EXPECT_EQ(r.t2_ms, 400);
  EXPECT_NEAR(r.m0, 1.0, 1e-6);
}

TEST(Matching, InvariantToScaleAndPhase)
{
  auto const d = coarse_dictionary();
  auto const e = d.find(1300, 100);
  ASSERT_GE(e, 0);
  auto sig = entry_signal(d, e);
  Cxd const f = 0.37 * std::polar(1.0, 2.1);
  for (auto &v : sig) { v *= f; }
  auto const r = match_signal(sig, d);
  EXPECT_EQ(r.entry, e);
  EXPECT_NEAR(r.m0, 0.37, 1e-6);
}

TEST(Matching, EveryEntryMatchesItself)
{
  auto const d = coarse_dictionary();
  for (Index e = 0; e < d.entry_count(); ++e) {
    std::vector<Cxd> sig;
    for (auto v : d.signal(e)) { sig.push_back(Cxd(v)); }
    EXPECT_EQ(match_signal(sig, d).entry, e);
  }
}

TEST(Matching, ZeroSignalSkipped)
{
  auto const d = coarse_dictionary();
  auto const r = match_signal(std::vector<Cxd>(200), d);
  EXPECT_FALSE(r.matched());
  EXPECT_EQ(r.m0, 0);
  EXPECT_THROW(match_signal(std::vector<Cxd>(199), d), std::invalid_argument);
}

TEST(Matching, TiesResolveToLowestIndex)
{
  auto d = coarse_dictionary(20);
  // Duplicate entry 3 at the end.
  d.signals.insert(d.signals.end(), d.signals.begin() + 3 * 20, d.signals.begin() + 4 * 20);
  d.t1_ms.push_back(d.t1_ms[3]);
  d.t2_ms.push_back(d.t2_ms[3]);
  d.norm_scale.push_back(d.norm_scale[3]);
  EXPECT_EQ(match_signal(entry_signal(d, d.entry_count() - 1), d).entry, 3);
}

TEST(Matching, WhiteMatterUnderNoise)
{
  auto const schedule = default_fisp_schedule(480);
  auto const t1 = neighbourhood(make_grid(default_t1_ranges()), 800, 500, 1200);
  auto const t2 = neighbourhood(make_grid(default_t2_ranges()), 40, 2, 150);
  auto const d = build_dictionary(t1, t2, schedule);
  auto const clean = simulate_tissue_signals({{"wm", 800, 40}}, schedule);
  int close = 0;
  int const trials = 200;
  for (int k = 0; k < trials; ++k) {
    auto const noisy = simulate_gaussian_model(clean, 9, static_cast<std::uint64_t>(1000 + k));
    auto const r = match_signal(noisy[0].d, d);
    auto const di = std::abs(step_index(t1, r.t1_ms) - step_index(t1, 800));
    auto const dj = std::abs(step_index(t2, r.t2_ms) - step_index(t2, 40));
    if (di <= 1 && dj <= 1) { ++close; }
  }
  EXPECT_GE(close, trials * 9 / 10);
}

TEST(Matching, SeriesMapsAndSkipMask)
{
  auto const d = coarse_dictionary();
  Shape2 const shape{6, 7};
  auto const series = make_series(shape, 200, d.schedule_hash, [&](Index p) {
    if (p % 5 == 0) { return std::vector<Cxd>(200); }
    auto sig = entry_signal(d, p % d.entry_count());
    for (auto &v : sig) { v *= 2.0; }
    return sig;
  });
  auto const maps = match_series(series, d);
  for (Index p = 0; p < shape.size(); ++p) {
    if (p % 5 == 0) {
      EXPECT_EQ(maps.match_mask[p], 0);
      EXPECT_EQ(maps.t1[p], 0.f);
      continue;
    }
    auto const e = static_cast<std::size_t>(p % d.entry_count());
    EXPECT_EQ(maps.match_mask[p], 1);
    EXPECT_EQ(maps.t1[p], static_cast<float>(d.t1_ms[e]));
    EXPECT_EQ(maps.t2[p], static_cast<float>(d.t2_ms[e]));
    EXPECT_NEAR(maps.m0[p], 2.0, 1e-5);
  }
}

TEST(Matching, SeriesValidation)
{
  auto const d = coarse_dictionary();
  auto bad = make_series({2, 2}, 199, "", [](Index) { return std::vector<Cxd>(199, 1.0); });
  EXPECT_THROW(match_series(bad, d), std::invalid_argument);
  auto other = make_series({2, 2}, 200, "0123", [](Index) { return std::vector<Cxd>(200, 1.0); });
  EXPECT_THROW(match_series(other, d), std::invalid_argument);
}

TEST(Matching, SerialAndParallelAgree)
{
  auto const d = coarse_dictionary();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  Shape2 const shape{16, 20};
  auto const series = make_series(shape, 200, d.schedule_hash, [&](Index p) {
    auto sig = entry_signal(d, (p * 7) % d.entry_count());
    for (auto &v : sig) { v += Cxd(0.02 * n(rng), 0.02 * n(rng)); }
    return sig;
  });
  MatchOptions serial;
  serial.exec = Exec::Serial;
  auto const a = match_series(series, d, serial);
  auto const b = match_series(series, d);
  EXPECT_EQ(a.t1, b.t1);
  EXPECT_EQ(a.t2, b.t2);
  EXPECT_EQ(a.match_mask, b.match_mask);
  for (Index p = 0; p < shape.size(); ++p) { EXPECT_NEAR(a.m0[p], b.m0[p], 1e-5 * std::abs(a.m0[p])); }
}
