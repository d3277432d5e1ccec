#pragma once

#include "grid.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mrf {

using Json = nlohmann::json;

enum class DType { F32, C64 };

auto dtype_name(DType t) -> char const *;
auto dtype_size(DType t) -> std::size_t;

struct TensorHeader
{
  DType dtype = DType::F32;
  std::vector<Index> shape;
  Json meta = Json::object();

  auto element_count() const -> Index;
};

template <typename T>
struct Tensor
{
  TensorHeader header;
  std::vector<T> data;
};

/// Writes `{magic, version, dtype, shape, meta}` as one JSON line, then the raw
/// little-endian row-major payload. `meta.payload_hash` is added automatically.
void write_tensor(std::string const &path, std::vector<Index> const &shape, std::span<float const> data, Json meta);
void write_tensor(std::string const &path, std::vector<Index> const &shape, std::span<Cx const> data, Json meta);

/// `base` plus every key of `extra` that `base` does not already define.
auto merge_meta(Json base, Json const &extra) -> Json;

auto read_tensor_header(std::string const &path) -> TensorHeader;
/// Reads and validates a tensor (magic, version, dtype, exact payload length, payload hash).
auto read_real_tensor(std::string const &path) -> Tensor<float>;
auto read_cx_tensor(std::string const &path) -> Tensor<Cx>;

} // namespace mrf
