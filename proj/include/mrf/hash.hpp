#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace mrf {

/// 64-bit FNV-1a over raw bytes. Used for content-addressed cache keys, not security.
class Hasher
{
public:
  auto bytes(void const *data, std::size_t n) -> Hasher &;
  auto text(std::string_view s) -> Hasher &;

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  auto values(std::span<T const> v) -> Hasher &
  {
    auto const n = static_cast<std::uint64_t>(v.size());
    bytes(&n, sizeof(n));
    return bytes(v.data(), v.size_bytes());
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  auto value(T v) -> Hasher &
  {
    return bytes(&v, sizeof(v));
  }

  auto digest() const -> std::uint64_t { return state_; }
  auto hex() const -> std::string;

private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

auto hex64(std::uint64_t v) -> std::string;

} // namespace mrf
