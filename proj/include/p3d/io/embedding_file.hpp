#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "p3d/io/binary.hpp"

namespace p3d {

/// Per-prompt vectors in the "P3DE" container: magic, version u32, count u32,
/// then per entry key (u32 len + UTF-8), dim u32, dim x f32.
using EmbeddingTable = std::map<std::string, std::vector<float>>;

inline constexpr std::uint32_t kEmbeddingFileVersion = 1;

inline void write_embedding_file(std::ostream& out, const EmbeddingTable& table) {
  out.write("P3DE", 4);
  binary::write_u32(out, kEmbeddingFileVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(table.size()));
  for (const auto& [key, vec] : table) {
    binary::write_string(out, key);
    binary::write_u32(out, static_cast<std::uint32_t>(vec.size()));
    out.write(reinterpret_cast<const char*>(vec.data()), static_cast<std::streamsize>(vec.size() * 4));
  }
  if (!out) throw IoError("embedding write failed");
}

inline EmbeddingTable read_embedding_file(std::istream& in) {
  binary::expect_magic(in, "P3DE");
  const auto version = binary::read_u32(in);
  if (version != kEmbeddingFileVersion) throw IoError("unsupported P3DE version " + std::to_string(version));
  const auto count = binary::read_u32(in);
  EmbeddingTable out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string key = binary::read_string(in);
    const auto dim = binary::read_u32(in);
    if (dim > (1u << 20)) throw IoError("embedding dim out of range");
    std::vector<float> v(dim);
    if (dim && !in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim) * 4))
      throw IoError("truncated embedding payload");
    out[std::move(key)] = std::move(v);
  }
  return out;
}

inline void save_embedding_file(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_embedding_file(out, table);
}

inline EmbeddingTable load_embedding_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_embedding_file(in);
}

}  // namespace p3d
