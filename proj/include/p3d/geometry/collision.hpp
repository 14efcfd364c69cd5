#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "p3d/geometry/layout.hpp"

namespace p3d {

inline constexpr double kDefaultCollisionThreshold = 1e-4;  // m^3

struct CollisionMatrix {
  std::size_t n = 0;
  std::vector<bool> colliding;  // n*n, row-major, symmetric, false diagonal
  double total_volume = 0.0;    // sum of pairwise overlap volume over i < j
  std::size_t pair_count = 0;

  bool at(std::size_t i, std::size_t j) const { return colliding[i * n + j]; }
  bool any() const { return pair_count > 0; }
};

inline CollisionMatrix collision_matrix(std::span<const Layout7DoF> layouts,
                                        double threshold = kDefaultCollisionThreshold) {
  CollisionMatrix m;
  m.n = layouts.size();
  m.colliding.assign(m.n * m.n, false);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = i + 1; j < m.n; ++j) {
      const double v = intersection_volume(layouts[i], layouts[j]);
      m.total_volume += v;
      if (v > threshold) {
        m.colliding[i * m.n + j] = m.colliding[j * m.n + i] = true;
        ++m.pair_count;
      }
    }
  }
  return m;
}

}  // namespace p3d
