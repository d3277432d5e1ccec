#include "mrf/hash.hpp"

#include <cstdio>

namespace mrf {

auto Hasher::bytes(void const *data, std::size_t n) -> Hasher &
{
  auto const *p = static_cast<unsigned char const *>(data);
  for (std::size_t i = 0; i < n; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

auto Hasher::text(std::string_view s) -> Hasher &
{
  auto const n = static_cast<std::uint64_t>(s.size());
  bytes(&n, sizeof(n));
  return bytes(s.data(), s.size());
}

auto Hasher::hex() const -> std::string { return hex64(state_); }

auto hex64(std::uint64_t v) -> std::string
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

} // namespace mrf
