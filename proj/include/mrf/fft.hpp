#pragma once

#include "grid.hpp"

#include <memory>

namespace mrf {

/// In-place 2D complex FFT of a fixed size, unnormalized in both directions.
/// Plans are built once; `forward`/`backward` are reentrant and may run concurrently
/// on distinct buffers.
class Fft2
{
public:
  explicit Fft2(Shape2 shape);
  ~Fft2();
  Fft2(Fft2 const &) = delete;
  auto operator=(Fft2 const &) -> Fft2 & = delete;
  Fft2(Fft2 &&) noexcept;
  auto operator=(Fft2 &&) noexcept -> Fft2 &;

  auto shape() const -> Shape2 { return shape_; }
  /// X[j] = sum_n x[n] exp(-2 pi i j n / N)
  void forward(Cxd *data) const;
  /// x[n] = sum_j X[j] exp(+2 pi i j n / N)
  void backward(Cxd *data) const;

private:
  struct Plans;
  Shape2 shape_;
  std::unique_ptr<Plans> plans_;
};

} // namespace mrf
