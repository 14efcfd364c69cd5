#pragma once

#include <algorithm>
#include <cmath>

#include "p3d/geometry/layout.hpp"
#include "p3d/metrics/point_cloud.hpp"

namespace p3d {

/// Exact signed distance to an origin-centered axis-aligned box.
inline double box_sdf(const Vec3& p, const Vec3& half_extents) {
  double outside = 0.0;
  double inside = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double q = std::abs(p[k]) - half_extents[k];
    outside += q > 0 ? q * q : 0.0;
    inside = std::max(inside, q);
  }
  return std::sqrt(outside) + std::min(inside, 0.0);
}

/// World point -> box-local frame (origin at the box center, axes along w, l, h).
inline Vec3 to_box_frame(const Layout7DoF& b, const Vec3& p) {
  const double theta = bin_radians(b.angle_bin);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double dx = p[0] - b.cx;
  const double dy = p[1] - b.cy;
  return {c * dx + s * dy, -s * dx + c * dy, p[2] - (b.cz + 0.5 * b.h)};
}

inline double layout_sdf(const Layout7DoF& b, const Vec3& p) {
  return box_sdf(to_box_frame(b, p), {0.5 * b.w, 0.5 * b.l, 0.5 * b.h});
}

}  // namespace p3d
