#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <openssl/evp.h>

#include "p3d/core/error.hpp"

namespace p3d {

using Sha256Digest = std::array<std::uint8_t, 32>;

inline Sha256Digest sha256(std::string_view bytes) {
  Sha256Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
    throw NumericError("sha256 digest failed");
  return out;
}

/// First 8 digest bytes, little-endian, as a generator key.
inline std::uint64_t sha256_key(std::string_view bytes) {
  const auto d = sha256(bytes);
  std::uint64_t k = 0;
  for (int i = 7; i >= 0; --i) k = (k << 8) | d[static_cast<std::size_t>(i)];
  return k;
}

}  // namespace p3d
