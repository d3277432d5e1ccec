#include "mrf/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

namespace mrf {

namespace {
// FFTW's planner is not thread-safe; execution with the new-array interface is.
std::mutex planner_mutex;
} // namespace

struct Fft2::Plans
{
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  Plans() = default;
  Plans(Plans const &) = delete;
  auto operator=(Plans const &) -> Plans & = delete;
  ~Plans()
  {
    std::lock_guard lock(planner_mutex);
    if (fwd) { fftw_destroy_plan(fwd); }
    if (bwd) { fftw_destroy_plan(bwd); }
  }
};

Fft2::Fft2(Shape2 shape)
  : shape_{shape}
  , plans_{std::make_unique<Plans>()}
{
  if (shape.rows <= 0 || shape.cols <= 0) { throw std::invalid_argument("Fft2: empty shape"); }
  std::vector<Cxd> scratch(static_cast<std::size_t>(shape.size()));
  auto *buf = reinterpret_cast<fftw_complex *>(scratch.data());
  std::lock_guard lock(planner_mutex);
  unsigned const flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->fwd = fftw_plan_dft_2d(static_cast<int>(shape.rows), static_cast<int>(shape.cols), buf, buf, FFTW_FORWARD, flags);
  plans_->bwd = fftw_plan_dft_2d(static_cast<int>(shape.rows), static_cast<int>(shape.cols), buf, buf, FFTW_BACKWARD, flags);
  if (!plans_->fwd || !plans_->bwd) { throw std::runtime_error("Fft2: FFTW planning failed"); }
}

Fft2::~Fft2() = default;

Fft2::Fft2(Fft2 &&) noexcept = default;
auto Fft2::operator=(Fft2 &&) noexcept -> Fft2 & = default;

void Fft2::forward(Cxd *data) const
{
  auto *buf = reinterpret_cast<fftw_complex *>(data);
  fftw_execute_dft(plans_->fwd, buf, buf);
}

void Fft2::backward(Cxd *data) const
{
  auto *buf = reinterpret_cast<fftw_complex *>(data);
  fftw_execute_dft(plans_->bwd, buf, buf);
}

} // namespace mrf
