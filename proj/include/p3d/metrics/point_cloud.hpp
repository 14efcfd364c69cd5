#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "p3d/core/error.hpp"

namespace p3d {

using Vec3 = std::array<double, 3>;

class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {}

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec3> points() const noexcept { return points_; }
  std::vector<Vec3>& mutable_points() noexcept { return points_; }
  void push_back(const Vec3& p) { points_.push_back(p); }

  void validate(const char* what = "point cloud") const {
    if (points_.empty()) throw ValidationError(std::string(what) + " is empty");
    for (const auto& p : points_)
      for (double v : p)
        if (!std::isfinite(v)) throw ValidationError(std::string(what) + " has a non-finite coordinate");
  }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
  friend auto operator<=>(const PointCloud& a, const PointCloud& b) { return a.points_ <=> b.points_; }

 private:
  std::vector<Vec3> points_;
};

using SceneCollection = std::vector<PointCloud>;

inline double squared_distance(const Vec3& a, const Vec3& b) noexcept {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace p3d
