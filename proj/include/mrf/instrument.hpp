#pragma once

#include <atomic>
#include <cstdint>

namespace mrf {

/// Process-wide operation counters. Tests use them to prove that the fast
/// simulator and the optimizer objective never touch the NUFFT.
struct Counters
{
  std::atomic<std::uint64_t> nufft_forward{0};
  std::atomic<std::uint64_t> nufft_adjoint{0};
  std::atomic<std::uint64_t> srf_precompute{0};

  auto nufft_total() const -> std::uint64_t { return nufft_forward.load() + nufft_adjoint.load(); }
  void reset();
};

auto counters() -> Counters &;

} // namespace mrf
