#include "mrf/nufft.hpp"

#include "mrf/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mrf {

KaiserBessel::KaiserBessel(Index width, double oversampling, Index table_size)
  : width_{width}
{
  if (width < 2) { throw std::invalid_argument("kernel width must be >= 2 cells"); }
  if (!(oversampling > 1.0)) { throw std::invalid_argument("oversampling must exceed 1"); }
  if (table_size < 16) { throw std::invalid_argument("kernel table needs at least 16 entries"); }
  double const w = static_cast<double>(width);
  double const arg = (w / oversampling) * (w / oversampling) * (oversampling - 0.5) * (oversampling - 0.5) - 0.8;
  beta_ = std::numbers::pi * std::sqrt(std::max(arg, 0.0));
  i0beta_ = std::cyl_bessel_i(0.0, beta_);
  step_ = 0.5 * w / static_cast<double>(table_size - 1);
  table_.resize(static_cast<std::size_t>(table_size) + 1);
  for (Index i = 0; i < table_size; ++i) { table_[static_cast<std::size_t>(i)] = exact(static_cast<double>(i) * step_); }
  table_.back() = 0.0;
}

auto KaiserBessel::exact(double d) const -> double
{
  double const t = 2.0 * d / static_cast<double>(width_);
  double const z = 1.0 - t * t;
  if (z < 0) { return 0.0; }
  return std::cyl_bessel_i(0.0, beta_ * std::sqrt(z)) / i0beta_;
}

auto KaiserBessel::operator()(double d) const -> double
{
  double const x = std::abs(d) / step_;
  auto const i = static_cast<std::size_t>(x);
  if (i + 1 >= table_.size()) { return 0.0; }
  double const f = x - static_cast<double>(i);
  return table_[i] + f * (table_[i + 1] - table_[i]);
}

auto KaiserBessel::transform(double nu) const -> double
{
  double const w = static_cast<double>(width_);
  double const a = std::numbers::pi * w * nu;
  double const q = beta_ * beta_ - a * a;
  double v;
  if (q > 1e-12) {
    double const s = std::sqrt(q);
    v = std::sinh(s) / s;
  } else if (q < -1e-12) {
    double const s = std::sqrt(-q);
    v = std::sin(s) / s;
  } else {
    v = 1.0;
  }
  return w * v / i0beta_;
}

namespace {

auto oversampled(Index n, double sigma) -> Index
{
  auto g = static_cast<Index>(std::ceil(sigma * static_cast<double>(n)));
  return g + (g % 2);
}

auto wrap(Index i, Index n) -> Index
{
  Index const r = i % n;
  return r < 0 ? r + n : r;
}

} // namespace

GriddingPlan::GriddingPlan(std::span<double const> kx, std::span<double const> ky, Shape2 image, NufftParams params)
  : image_{image}
  , grid_{oversampled(image.rows, params.oversampling), oversampled(image.cols, params.oversampling)}
  , params_{params}
  , kernel_{params.kernel_width, params.oversampling, params.table_size}
  , n_samples_{static_cast<Index>(kx.size())}
  , width_{params.kernel_width}
  , fft_{grid_}
{
  if (image.rows < 1 || image.cols < 1) { throw std::invalid_argument("nufft plan: empty image shape"); }
  if (kx.empty()) { throw std::invalid_argument("nufft plan: no sample coordinates"); }
  if (kx.size() != ky.size()) { throw std::invalid_argument("nufft plan: kx and ky lengths differ"); }
  constexpr double kTol = 1e-6;
  for (std::size_t m = 0; m < kx.size(); ++m) {
    if (!(std::abs(kx[m]) <= 0.5 + kTol) || !(std::abs(ky[m]) <= 0.5 + kTol)) {
      throw std::invalid_argument("nufft plan: coordinate outside [-0.5, 0.5] cycles/pixel");
    }
  }

  auto const n = static_cast<std::size_t>(n_samples_);
  auto const w = static_cast<std::size_t>(width_);
  row0_.resize(n);
  col0_.resize(n);
  wrow_.resize(n * w);
  wcol_.resize(n * w);
  double const half = 0.5 * static_cast<double>(width_);
  for (std::size_t m = 0; m < n; ++m) {
    double const ur = ky[m] * static_cast<double>(grid_.rows);
    double const uc = kx[m] * static_cast<double>(grid_.cols);
    auto const jr = static_cast<Index>(std::floor(ur - half)) + 1;
    auto const jc = static_cast<Index>(std::floor(uc - half)) + 1;
    row0_[m] = static_cast<std::int32_t>(wrap(jr, grid_.rows));
    col0_[m] = static_cast<std::int32_t>(wrap(jc, grid_.cols));
    for (std::size_t a = 0; a < w; ++a) {
      wrow_[m * w + a] = kernel_(ur - static_cast<double>(jr + static_cast<Index>(a)));
      wcol_[m * w + a] = kernel_(uc - static_cast<double>(jc + static_cast<Index>(a)));
    }
  }

  bucket_start_.assign(static_cast<std::size_t>(grid_.rows) + 1, 0);
  for (auto r0 : row0_) { ++bucket_start_[static_cast<std::size_t>(r0) + 1]; }
  for (std::size_t b = 1; b < bucket_start_.size(); ++b) { bucket_start_[b] += bucket_start_[b - 1]; }
  bucket_samples_.resize(n);
  std::vector<Index> fill(bucket_start_.begin(), bucket_start_.end() - 1);
  for (std::size_t m = 0; m < n; ++m) {
    bucket_samples_[static_cast<std::size_t>(fill[static_cast<std::size_t>(row0_[m])]++)] = static_cast<Index>(m);
  }

  auto deapod = [&](Index count, Index g) {
    std::vector<double> d(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
      double const x = static_cast<double>(i - count / 2);
      d[static_cast<std::size_t>(i)] = kernel_.transform(x / static_cast<double>(g));
      if (!(d[static_cast<std::size_t>(i)] > 0)) { throw std::invalid_argument("nufft plan: deapodization not positive"); }
    }
    return d;
  };
  deapod_rows_ = deapod(image_.rows, grid_.rows);
  deapod_cols_ = deapod(image_.cols, grid_.cols);
}

auto GriddingPlan::forward(CxdGrid const &image, Exec exec) const -> std::vector<Cxd>
{
  if (image.shape() != image_) {
    throw std::invalid_argument("nufft forward: image " + to_string(image.shape()) + " does not match plan " + to_string(image_));
  }
  counters().nufft_forward++;
  std::vector<Cxd> grid(static_cast<std::size_t>(grid_.size()));
  for (Index r = 0; r < image_.rows; ++r) {
    Index const gr = wrap(r - image_.rows / 2, grid_.rows);
    for (Index c = 0; c < image_.cols; ++c) {
      Index const gc = wrap(c - image_.cols / 2, grid_.cols);
      grid[static_cast<std::size_t>(gr * grid_.cols + gc)] =
        image(r, c) / (deapod_rows_[static_cast<std::size_t>(r)] * deapod_cols_[static_cast<std::size_t>(c)]);
    }
  }
  fft_.forward(grid.data());
  std::vector<Cxd> out(static_cast<std::size_t>(n_samples_));
  interpolate(grid, out, exec);
  return out;
}

void GriddingPlan::interpolate(std::vector<Cxd> const &grid, std::span<Cxd> out, Exec exec) const
{
  auto const w = static_cast<std::size_t>(width_);
  auto const gcols = grid_.cols;
  auto sample = [&](Index m) {
    auto const mm = static_cast<std::size_t>(m);
    double const *wr = &wrow_[mm * w];
    double const *wc = &wcol_[mm * w];
    Cxd acc{0, 0};
    Index row = row0_[mm];
    for (std::size_t a = 0; a < w; ++a) {
      Cxd const *line = &grid[static_cast<std::size_t>(row * gcols)];
      Index col = col0_[mm];
      Cxd lacc{0, 0};
      for (std::size_t b = 0; b < w; ++b) {
        lacc += wc[b] * line[col];
        if (++col == gcols) { col = 0; }
      }
      acc += wr[a] * lacc;
      if (++row == grid_.rows) { row = 0; }
    }
    out[mm] = acc;
  };
  if (exec == Exec::Serial) {
    for (Index m = 0; m < n_samples_; ++m) { sample(m); }
  } else {
#pragma omp parallel for schedule(static)
    for (Index m = 0; m < n_samples_; ++m) { sample(m); }
  }
}

auto GriddingPlan::adjoint(std::span<Cxd const> samples, std::span<double const> weights, Exec exec) const -> CxdGrid
{
  if (static_cast<Index>(samples.size()) != n_samples_) {
    throw std::invalid_argument("nufft adjoint: sample count does not match plan");
  }
  return adjoint_range(0, samples, weights, exec);
}

auto GriddingPlan::adjoint_range(Index first, std::span<Cxd const> samples, std::span<double const> weights, Exec exec) const
  -> CxdGrid
{
  auto const count = static_cast<Index>(samples.size());
  if (first < 0 || first + count > n_samples_) { throw std::invalid_argument("nufft adjoint: sample range outside plan"); }
  if (!weights.empty() && weights.size() != samples.size()) {
    throw std::invalid_argument("nufft adjoint: weight count does not match samples");
  }
  counters().nufft_adjoint++;
  std::vector<Cxd> grid(static_cast<std::size_t>(grid_.size()));
  if (exec == Exec::Serial) {
    spread_serial(first, samples, weights, grid);
  } else {
    spread_parallel(first, samples, weights, grid);
  }
  fft_.backward(grid.data());
  CxdGrid image(image_);
  for (Index r = 0; r < image_.rows; ++r) {
    Index const gr = wrap(r - image_.rows / 2, grid_.rows);
    for (Index c = 0; c < image_.cols; ++c) {
      Index const gc = wrap(c - image_.cols / 2, grid_.cols);
      image(r, c) = grid[static_cast<std::size_t>(gr * grid_.cols + gc)] /
                    (deapod_rows_[static_cast<std::size_t>(r)] * deapod_cols_[static_cast<std::size_t>(c)]);
    }
  }
  return image;
}

void GriddingPlan::spread_serial(Index first,
                                 std::span<Cxd const> samples,
                                 std::span<double const> weights,
                                 std::vector<Cxd> &grid) const
{
  auto const w = static_cast<std::size_t>(width_);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto const m = static_cast<std::size_t>(first) + i;
    Cxd const v = weights.empty() ? samples[i] : samples[i] * weights[i];
    Index row = row0_[m];
    for (std::size_t a = 0; a < w; ++a) {
      Cxd const va = v * wrow_[m * w + a];
      Index col = col0_[m];
      for (std::size_t b = 0; b < w; ++b) {
        grid[static_cast<std::size_t>(row * grid_.cols + col)] += va * wcol_[m * w + b];
        if (++col == grid_.cols) { col = 0; }
      }
      if (++row == grid_.rows) { row = 0; }
    }
  }
}

// Each thread owns whole grid rows and visits the samples whose footprint covers them in a
// fixed order (footprint start row, then sample index), so the result does not depend on the
// thread count.
void GriddingPlan::spread_parallel(Index first,
                                   std::span<Cxd const> samples,
                                   std::span<double const> weights,
                                   std::vector<Cxd> &grid) const
{
  auto const w = static_cast<std::size_t>(width_);
  Index const last = first + static_cast<Index>(samples.size());
  Index const grows = grid_.rows;
#pragma omp parallel for schedule(static)
  for (Index row = 0; row < grows; ++row) {
    Cxd *line = &grid[static_cast<std::size_t>(row * grid_.cols)];
    for (Index back = width_ - 1; back >= 0; --back) {
      Index const bucket = wrap(row - back, grows);
      auto const *begin = bucket_samples_.data() + bucket_start_[static_cast<std::size_t>(bucket)];
      auto const *end = bucket_samples_.data() + bucket_start_[static_cast<std::size_t>(bucket) + 1];
      for (auto const *it = std::lower_bound(begin, end, first); it != end && *it < last; ++it) {
        auto const m = static_cast<std::size_t>(*it);
        auto const i = static_cast<std::size_t>(*it - first);
        Cxd const v = (weights.empty() ? samples[i] : samples[i] * weights[i]) * wrow_[m * w + static_cast<std::size_t>(back)];
        Index col = col0_[m];
        for (std::size_t b = 0; b < w; ++b) {
          line[col] += v * wcol_[m * w + b];
          if (++col == grid_.cols) { col = 0; }
        }
      }
    }
  }
}

} // namespace mrf
