#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace p3d {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: the i-th draw is a pure function of (key, i).
///
/// All engine randomness goes through this type so that seeded runs are
/// bit-identical across standard libraries (std::normal_distribution is
/// implementation-defined).
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(splitmix64(key)) {}

  /// Independent generator for a named sub-stream of the same seed.
  static constexpr CounterRng substream(std::uint64_t seed, std::uint64_t stream) noexcept {
    return CounterRng(splitmix64(seed) ^ splitmix64(stream * 0xd1b54a32d192ed03ULL + 1));
  }

  constexpr std::uint64_t next_u64() noexcept {
    return splitmix64(key_ ^ splitmix64(counter_++));
  }

  /// Uniform in [0, 1).
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard normal via Box-Muller; the paired value is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace p3d
