#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "p3d/io/binary.hpp"

namespace p3d {

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t numel() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Named f32 tensors in the "P3DW" container:
/// magic, version u32, count u32, then per tensor name (u32 len + UTF-8),
/// rank u32, dims u32 x rank, f32 payload. Entries are written in name order.
using TensorMap = std::map<std::string, Tensor>;

inline constexpr std::uint32_t kTensorFileVersion = 1;

inline void write_tensor_file(std::ostream& out, const TensorMap& tensors) {
  out.write("P3DW", 4);
  binary::write_u32(out, kTensorFileVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (t.values.size() != t.numel()) throw IoError("tensor '" + name + "' payload does not match dims");
    binary::write_string(out, name);
    binary::write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) binary::write_u32(out, d);
    out.write(reinterpret_cast<const char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * 4));
  }
  if (!out) throw IoError("tensor write failed");
}

inline TensorMap read_tensor_file(std::istream& in) {
  binary::expect_magic(in, "P3DW");
  const auto version = binary::read_u32(in);
  if (version != kTensorFileVersion) throw IoError("unsupported P3DW version " + std::to_string(version));
  const auto count = binary::read_u32(in);
  TensorMap out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = binary::read_string(in);
    Tensor t;
    const auto rank = binary::read_u32(in);
    if (rank > 8) throw IoError("tensor rank out of range");
    for (std::uint32_t r = 0; r < rank; ++r) t.dims.push_back(binary::read_u32(in));
    const std::size_t n = t.numel();
    if (n > (std::size_t{1} << 31)) throw IoError("tensor too large");
    t.values.resize(n);
    if (n && !in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(n * 4)))
      throw IoError("truncated tensor payload");
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

inline void save_tensor_file(const std::string& path, const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_tensor_file(out, tensors);
}

inline TensorMap load_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_tensor_file(in);
}

}  // namespace p3d
