#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "p3d/core/error.hpp"

namespace p3d {

inline constexpr int kRotationBins = 24;
inline constexpr double kBinWidthDeg = 360.0 / kRotationBins;

/// Oriented box with a discretized yaw.
///
/// World frame: x is the left/right axis, y the front/behind axis, z is up.
/// (cx, cy, cz) is the bottom-center, so the box spans [cz, cz + h] vertically.
/// At bin 0 the width runs along x and the length along y.
template <typename T>
struct BasicLayout {
  T w{1};
  T l{1};
  T h{1};
  T cx{0};
  T cy{0};
  T cz{0};
  int angle_bin = 0;

  friend bool operator==(const BasicLayout&, const BasicLayout&) = default;
};

using Layout7DoF = BasicLayout<double>;

inline int bin_angle(double alpha_deg) {
  double a = std::fmod(alpha_deg, 360.0);
  if (a < 0) a += 360.0;
  const int bin = static_cast<int>(std::floor((a + kBinWidthDeg / 2) / kBinWidthDeg)) % kRotationBins;
  return bin;
}

inline constexpr double unbin_angle(int bin) { return kBinWidthDeg * bin; }

inline double bin_radians(int bin) { return unbin_angle(bin) * std::numbers::pi / 180.0; }

inline void validate_layout(const Layout7DoF& b, const std::string& path = {}) {
  if (!(b.w > 0 && b.l > 0 && b.h > 0)) throw ValidationError("box extents must be strictly positive", path);
  if (!(std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.cz) && std::isfinite(b.w) &&
        std::isfinite(b.l) && std::isfinite(b.h)))
    throw ValidationError("box parameters must be finite", path);
  if (b.angle_bin < 0 || b.angle_bin >= kRotationBins) throw ValidationError("angle bin out of range [0,24)", path);
}

template <typename T>
struct Point3 {
  T x{0};
  T y{0};
  T z{0};
};

template <typename T>
using CornerSet = std::array<Point3<T>, 8>;

/// The 8 vertices in canonical order: bottom face first, then top face; each
/// face lists local offsets (-w/2,-l/2), (+w/2,-l/2), (+w/2,+l/2), (-w/2,+l/2)
/// before rotation about the vertical axis through (cx, cy).
template <typename T>
CornerSet<T> corners(const BasicLayout<T>& b) {
  const double theta = bin_radians(b.angle_bin);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  constexpr int sx[4] = {-1, 1, 1, -1};
  constexpr int sy[4] = {-1, -1, 1, 1};
  CornerSet<T> out;
  for (int level = 0; level < 2; ++level) {
    for (int k = 0; k < 4; ++k) {
      const T dx = b.w * (0.5 * sx[k]);
      const T dy = b.l * (0.5 * sy[k]);
      auto& p = out[static_cast<std::size_t>(level * 4 + k)];
      p.x = b.cx + dx * c - dy * s;
      p.y = b.cy + dx * s + dy * c;
      p.z = level == 0 ? b.cz : b.cz + b.h;
    }
  }
  return out;
}

namespace detail {
template <typename T>
T tmin(const T& a, const T& b) { return b < a ? b : a; }
template <typename T>
T tmax(const T& a, const T& b) { return a < b ? b : a; }

template <typename T>
T interval_overlap(const T& a0, const T& a1, const T& b0, const T& b1) {
  const T o = tmin(a1, b1) - tmax(a0, b0);
  return o > T(0) ? o : T(0);
}
}  // namespace detail

/// Overlap volume of the axis-aligned extents (rotation ignored).
template <typename T>
T intersection_volume(const BasicLayout<T>& a, const BasicLayout<T>& b) {
  using detail::interval_overlap;
  const T ox = interval_overlap(a.cx - a.w * 0.5, a.cx + a.w * 0.5, b.cx - b.w * 0.5, b.cx + b.w * 0.5);
  const T oy = interval_overlap(a.cy - a.l * 0.5, a.cy + a.l * 0.5, b.cy - b.l * 0.5, b.cy + b.l * 0.5);
  const T oz = interval_overlap(a.cz, a.cz + a.h, b.cz, b.cz + b.h);
  return ox * oy * oz;
}

template <typename T>
T box_volume(const BasicLayout<T>& b) { return b.w * b.l * b.h; }

/// Axis-aligned IoU over the six box parameters; the yaw bin is ignored.
template <typename T>
T aabb_iou(const BasicLayout<T>& a, const BasicLayout<T>& b) {
  const T inter = intersection_volume(a, b);
  if (!(inter > T(0))) return T(0);
  return detail::tmin(inter / (box_volume(a) + box_volume(b) - inter), T(1));
}

enum class FlipAxis { X, Y };

/// Mirror across a world axis. The x-flip negates y (reflection across the
/// x axis); the y-flip negates x. Yaw is mirrored accordingly.
template <typename T>
BasicLayout<T> flip(const BasicLayout<T>& b, FlipAxis axis) {
  BasicLayout<T> out = b;
  if (axis == FlipAxis::X) {
    out.cy = -b.cy;
    out.angle_bin = (kRotationBins - b.angle_bin) % kRotationBins;
  } else {
    out.cx = -b.cx;
    out.angle_bin = ((kRotationBins / 2 - b.angle_bin) % kRotationBins + kRotationBins) % kRotationBins;
  }
  return out;
}

template <typename T>
T point_distance(const Point3<T>& p, const Point3<T>& q) {
  using std::sqrt;
  const T dx = p.x - q.x;
  const T dy = p.y - q.y;
  const T dz = p.z - q.z;
  return sqrt(dx * dx + dy * dy + dz * dz);
}

enum class CornerDistanceMode { MinPair, MatchedMean };

inline const char* to_string(CornerDistanceMode m) {
  return m == CornerDistanceMode::MinPair ? "min_pair" : "matched_mean";
}

/// Minimum distance over all 64 corner pairs.
template <typename T>
T min_pair_distance(const CornerSet<T>& a, const CornerSet<T>& b) {
  T best = point_distance(a[0], b[0]);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      if (i == 0 && j == 0) continue;
      const T d = point_distance(a[i], b[j]);
      if (d < best) best = d;
    }
  return best;
}

/// Mean distance between corresponding canonical corners.
template <typename T>
T matched_mean_distance(const CornerSet<T>& a, const CornerSet<T>& b) {
  T sum = point_distance(a[0], b[0]);
  for (std::size_t i = 1; i < 8; ++i) sum = sum + point_distance(a[i], b[i]);
  return sum / 8.0;
}

template <typename T>
T corner_set_distance(const CornerSet<T>& a, const CornerSet<T>& b, CornerDistanceMode mode) {
  return mode == CornerDistanceMode::MinPair ? min_pair_distance(a, b) : matched_mean_distance(a, b);
}

}  // namespace p3d
