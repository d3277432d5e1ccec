#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrf {

using Index = std::ptrdiff_t;
using Cx = std::complex<float>;
using Cxd = std::complex<double>;

/// Selects the reference (single-threaded, straightforward) implementation of a
/// kernel or the OpenMP one. Both must agree to within floating-point reordering.
enum class Exec { Serial, Parallel };

struct Shape2
{
  Index rows = 0;
  Index cols = 0;

  auto size() const -> Index { return rows * cols; }
  auto operator==(Shape2 const &) const -> bool = default;
};

inline auto to_string(Shape2 s) -> std::string
{
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

/// Dense row-major 2D grid.
template <typename T>
class Grid2
{
public:
  Grid2() = default;
  explicit Grid2(Shape2 shape, T fill = T{})
    : shape_{shape}
    , values_(static_cast<std::size_t>(shape.size()), fill)
  {
    if (shape.rows < 0 || shape.cols < 0) { throw std::invalid_argument("Grid2: negative shape"); }
  }
  Grid2(Shape2 shape, std::vector<T> values)
    : shape_{shape}
    , values_{std::move(values)}
  {
    if (static_cast<Index>(values_.size()) != shape.size()) {
      throw std::invalid_argument("Grid2: value count does not match shape " + to_string(shape));
    }
  }

  auto shape() const -> Shape2 { return shape_; }
  auto rows() const -> Index { return shape_.rows; }
  auto cols() const -> Index { return shape_.cols; }
  auto size() const -> Index { return shape_.size(); }

  auto operator()(Index r, Index c) -> T & { return values_[static_cast<std::size_t>(r * shape_.cols + c)]; }
  auto operator()(Index r, Index c) const -> T const &
  {
    return values_[static_cast<std::size_t>(r * shape_.cols + c)];
  }
  auto operator[](Index i) -> T & { return values_[static_cast<std::size_t>(i)]; }
  auto operator[](Index i) const -> T const & { return values_[static_cast<std::size_t>(i)]; }

  auto data() -> T * { return values_.data(); }
  auto data() const -> T const * { return values_.data(); }
  auto span() -> std::span<T> { return values_; }
  auto span() const -> std::span<T const> { return values_; }
  auto values() const -> std::vector<T> const & { return values_; }

  auto operator==(Grid2 const &) const -> bool = default;

private:
  Shape2 shape_{};
  std::vector<T> values_;
};

using RealGrid = Grid2<float>;
using CxGrid = Grid2<Cx>;
using CxdGrid = Grid2<Cxd>;

} // namespace mrf
