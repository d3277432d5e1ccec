#pragma once

#include "fft.hpp"
#include "grid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mrf {

struct NufftParams
{
  double oversampling = 2.0;
  Index kernel_width = 6; // grid cells
  Index table_size = 10000;
};

/// Kaiser-Bessel gridding kernel, normalized to 1 at the origin, with
/// beta = pi * sqrt((W / sigma)^2 (sigma - 1/2)^2 - 0.8).
class KaiserBessel
{
public:
  KaiserBessel(Index width, double oversampling, Index table_size);

  auto width() const -> Index { return width_; }
  auto beta() const -> double { return beta_; }
  /// Table-interpolated value at distance `d` grid cells.
  auto operator()(double d) const -> double;
  auto exact(double d) const -> double;
  /// Continuous Fourier transform of the exact kernel at `nu` cycles per grid cell.
  auto transform(double nu) const -> double;

private:
  Index width_;
  double beta_;
  double i0beta_;
  double step_;
  std::vector<double> table_;
};

/// Precomputed Kaiser-Bessel gridding for one coordinate set.
///
/// Coordinates are in cycles/pixel; image pixel (r, c) sits at (y, x) = (r - rows/2, c - cols/2), so
///   forward: s[m] = sum_{x,y} img(y, x) exp(-2 pi i (kx[m] x + ky[m] y))
/// and `adjoint` with unit weights is its exact conjugate transpose.
class GriddingPlan
{
public:
  GriddingPlan(std::span<double const> kx, std::span<double const> ky, Shape2 image, NufftParams params = {});

  auto image_shape() const -> Shape2 { return image_; }
  auto grid_shape() const -> Shape2 { return grid_; }
  auto n_samples() const -> Index { return n_samples_; }
  auto params() const -> NufftParams const & { return params_; }
  auto kernel() const -> KaiserBessel const & { return kernel_; }
  /// Separable deapodization factors (strictly positive over the field of view).
  auto deapodization_rows() const -> std::vector<double> const & { return deapod_rows_; }
  auto deapodization_cols() const -> std::vector<double> const & { return deapod_cols_; }

  auto forward(CxdGrid const &image, Exec exec = Exec::Parallel) const -> std::vector<Cxd>;

  /// Gridding reconstruction: weights (density compensation) multiply the samples before
  /// spreading. An empty `weights` span means unit weights.
  auto adjoint(std::span<Cxd const> samples, std::span<double const> weights = {}, Exec exec = Exec::Parallel) const
    -> CxdGrid;

  /// Adjoint restricted to the contiguous sample range [first, first + samples.size()).
  auto adjoint_range(Index first,
                     std::span<Cxd const> samples,
                     std::span<double const> weights,
                     Exec exec = Exec::Parallel) const -> CxdGrid;

private:
  void interpolate(std::vector<Cxd> const &grid, std::span<Cxd> out, Exec exec) const;
  void spread_serial(Index first, std::span<Cxd const> samples, std::span<double const> weights, std::vector<Cxd> &grid) const;
  void spread_parallel(Index first, std::span<Cxd const> samples, std::span<double const> weights, std::vector<Cxd> &grid) const;

  Shape2 image_;
  Shape2 grid_;
  NufftParams params_;
  KaiserBessel kernel_;
  Index n_samples_ = 0;
  Index width_ = 0;
  std::vector<std::int32_t> row0_, col0_;   // first footprint row/col per sample, already wrapped
  std::vector<double> wrow_, wcol_;         // width_ kernel weights per sample
  std::vector<Index> bucket_start_;         // CSR over footprint start row
  std::vector<Index> bucket_samples_;       // ascending sample indices per bucket
  std::vector<double> deapod_rows_, deapod_cols_;
  Fft2 fft_;
};

} // namespace mrf
