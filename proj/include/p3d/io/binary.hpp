#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "p3d/core/error.hpp"

namespace p3d::binary {

static_assert(std::endian::native == std::endian::little, "container readers assume a little-endian host");

inline void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

inline void write_f32(std::ostream& out, float v) { out.write(reinterpret_cast<const char*>(&v), 4); }

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw IoError("truncated container");
  return v;
}

inline std::string read_string(std::istream& in, std::uint32_t max_len = 1u << 20) {
  const std::uint32_t n = read_u32(in);
  if (n > max_len) throw IoError("string length out of range");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw IoError("truncated container");
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) throw IoError(std::string("bad magic, expected ") + magic);
}

}  // namespace p3d::binary
