#include "mrf/tensor_io.hpp"

#include "mrf/errors.hpp"
#include "mrf/hash.hpp"

#include <bit>
#include <fstream>
#include <functional>
#include <numeric>

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

namespace mrf {

namespace {

constexpr char const *kMagic = "MRFTENSOR";
constexpr int kVersion = 1;

auto payload_hash(void const *data, std::size_t n) -> std::string { return Hasher{}.bytes(data, n).hex(); }

template <typename T>
void write_impl(std::string const &path, std::vector<Index> const &shape, std::span<T const> data, DType dtype, Json meta)
{
  Index const count = std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>{});
  if (count != static_cast<Index>(data.size())) {
    throw std::invalid_argument("write_tensor: shape does not match element count for " + path);
  }
  if (meta.is_null()) { meta = Json::object(); }
  if (!meta.is_object()) { throw std::invalid_argument("write_tensor: meta must be a JSON object"); }
  meta["payload_hash"] = payload_hash(data.data(), data.size_bytes());
  Json header = {{"magic", kMagic}, {"version", kVersion}, {"dtype", dtype_name(dtype)}, {"shape", shape}, {"meta", meta}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw std::runtime_error("cannot open " + path + " for writing"); }
  auto const line = header.dump();
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.put('\n');
  out.write(reinterpret_cast<char const *>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  if (!out) { throw std::runtime_error("write failed for " + path); }
}

auto parse_header(std::string const &line, std::string const &path) -> TensorHeader
{
  Json j;
  try {
    j = Json::parse(line);
  } catch (Json::parse_error const &e) {
    throw FormatError(path + ": header is not valid JSON: " + e.what());
  }
  if (!j.is_object() || j.value("magic", "") != kMagic) { throw FormatError(path + ": bad magic"); }
  if (!j.contains("version") || j["version"] != kVersion) { throw FormatError(path + ": unsupported version"); }
  TensorHeader h;
  auto const dt = j.value("dtype", "");
  if (dt == "f32") {
    h.dtype = DType::F32;
  } else if (dt == "c64") {
    h.dtype = DType::C64;
  } else {
    throw FormatError(path + ": unknown dtype '" + dt + "'");
  }
  if (!j.contains("shape") || !j["shape"].is_array()) { throw FormatError(path + ": missing shape"); }
  for (auto const &d : j["shape"]) {
    if (!d.is_number_integer() || d.get<Index>() < 0) { throw FormatError(path + ": bad shape entry"); }
    h.shape.push_back(d.get<Index>());
  }
  h.meta = j.value("meta", Json::object());
  if (!h.meta.is_object()) { throw FormatError(path + ": meta must be an object"); }
  return h;
}

template <typename T>
auto read_impl(std::string const &path, DType expected) -> Tensor<T>
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw std::runtime_error("cannot open " + path); }
  std::string line;
  if (!std::getline(in, line)) { throw FormatError(path + ": empty file"); }
  Tensor<T> t{parse_header(line, path), {}};
  if (t.header.dtype != expected) {
    throw FormatError(path + ": expected dtype " + dtype_name(expected) + ", found " + dtype_name(t.header.dtype));
  }
  auto const count = static_cast<std::size_t>(t.header.element_count());
  t.data.resize(count);
  in.read(reinterpret_cast<char *>(t.data.data()), static_cast<std::streamsize>(count * sizeof(T)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(T)) { throw FormatError(path + ": truncated payload"); }
  if (in.peek() != std::ifstream::traits_type::eof()) { throw FormatError(path + ": trailing bytes after payload"); }
  if (t.header.meta.contains("payload_hash")) {
    if (t.header.meta["payload_hash"] != payload_hash(t.data.data(), count * sizeof(T))) {
      throw FormatError(path + ": payload hash mismatch (file modified?)");
    }
  }
  return t;
}

} // namespace

auto dtype_name(DType t) -> char const * { return t == DType::F32 ? "f32" : "c64"; }
auto dtype_size(DType t) -> std::size_t { return t == DType::F32 ? 4 : 8; }

auto TensorHeader::element_count() const -> Index
{
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>{});
}

void write_tensor(std::string const &path, std::vector<Index> const &shape, std::span<float const> data, Json meta)
{
  write_impl(path, shape, data, DType::F32, std::move(meta));
}

void write_tensor(std::string const &path, std::vector<Index> const &shape, std::span<Cx const> data, Json meta)
{
  write_impl(path, shape, data, DType::C64, std::move(meta));
}

auto read_tensor_header(std::string const &path) -> TensorHeader
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw std::runtime_error("cannot open " + path); }
  std::string line;
  if (!std::getline(in, line)) { throw FormatError(path + ": empty file"); }
  return parse_header(line, path);
}

auto read_real_tensor(std::string const &path) -> Tensor<float> { return read_impl<float>(path, DType::F32); }
auto read_cx_tensor(std::string const &path) -> Tensor<Cx> { return read_impl<Cx>(path, DType::C64); }

auto merge_meta(Json base, Json const &extra) -> Json
{
  if (!extra.is_object()) { return base; }
  for (auto const &[k, v] : extra.items()) {
    if (!base.contains(k)) { base[k] = v; }
  }
  return base;
}

} // namespace mrf
