#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace p3d {

/// Forward-mode dual number with N tangent directions. Comparisons look at
/// the value only, so branchy geometry code yields one-sided derivatives.
template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit constants

  static Dual variable(double value, std::size_t index) {
    Dual x(value);
    x.d[index] = 1.0;
    return x;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (std::size_t k = 0; k < N; ++k) d[k] += o.d[k];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (std::size_t k = 0; k < N; ++k) d[k] -= o.d[k];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (std::size_t k = 0; k < N; ++k) d[k] = d[k] * o.v + v * o.d[k];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    for (std::size_t k = 0; k < N; ++k) d[k] = (d[k] - v * inv * o.d[k]) * inv;
    v *= inv;
    return *this;
  }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend Dual operator/(Dual a, const Dual& b) { return a /= b; }
  friend Dual operator+(Dual a, double b) { a.v += b; return a; }
  friend Dual operator+(double a, Dual b) { b.v += a; return b; }
  friend Dual operator-(Dual a, double b) { a.v -= b; return a; }
  friend Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
  friend Dual operator*(Dual a, double b) {
    a.v *= b;
    for (auto& x : a.d) x *= b;
    return a;
  }
  friend Dual operator*(double a, Dual b) { return b * a; }
  friend Dual operator/(Dual a, double b) { return a * (1.0 / b); }
  friend Dual operator-(Dual a) {
    a.v = -a.v;
    for (auto& x : a.d) x = -x;
    return a;
  }

  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

  friend Dual sqrt(const Dual& a) {
    Dual out(std::sqrt(a.v));
    const double scale = out.v > 0 ? 0.5 / out.v : 0.0;
    for (std::size_t k = 0; k < N; ++k) out.d[k] = a.d[k] * scale;
    return out;
  }
};

template <std::size_t N>
Dual<N> hinge(const Dual<N>& x) {
  return x.v > 0.0 ? x : Dual<N>(0.0);
}

inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace p3d
