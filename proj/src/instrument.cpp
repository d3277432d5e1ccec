#include "mrf/instrument.hpp"

namespace mrf {

void Counters::reset()
{
  nufft_forward = 0;
  nufft_adjoint = 0;
  srf_precompute = 0;
}

auto counters() -> Counters &
{
  static Counters c;
  return c;
}

} // namespace mrf
