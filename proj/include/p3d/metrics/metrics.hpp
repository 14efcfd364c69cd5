#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include "p3d/core/error.hpp"
#include "p3d/core/matrix.hpp"
#include "p3d/core/parallel.hpp"
#include "p3d/core/rng.hpp"
#include "p3d/geometry/layout.hpp"
#include "p3d/io/json_io.hpp"
#include "p3d/io/tensor_file.hpp"
#include "p3d/metrics/point_cloud.hpp"

namespace p3d {

inline constexpr std::size_t kDefaultCloudPoints = 512;

/// Uniform cubic cells over the bounding box of a point set.
class NearestNeighborGrid {
 public:
  explicit NearestNeighborGrid(const PointCloud& cloud) : cloud_(cloud) {
    cloud.validate();
    lo_ = hi_ = cloud[0];
    for (const auto& p : cloud.points())
      for (int k = 0; k < 3; ++k) {
        lo_[k] = std::min(lo_[k], p[k]);
        hi_[k] = std::max(hi_[k], p[k]);
      }
    const double extent = std::max({hi_[0] - lo_[0], hi_[1] - lo_[1], hi_[2] - lo_[2]});
    const double per_axis = std::max(1.0, std::cbrt(static_cast<double>(cloud.size()) / 2.0));
    cell_ = extent > 0 ? extent / per_axis : 1.0;
    for (int k = 0; k < 3; ++k)
      dims_[k] = std::max<long>(1, static_cast<long>(std::floor((hi_[k] - lo_[k]) / cell_)) + 1);
    start_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]) + 1, 0);
    std::vector<std::size_t> cell_of(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto c = cell_index(cloud[i]);
      cell_of[i] = flat(c[0], c[1], c[2]);
      ++start_[cell_of[i] + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    order_.resize(cloud.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < cloud.size(); ++i) order_[fill[cell_of[i]]++] = i;
  }

  /// Squared distance from q to its nearest point in the cloud.
  double nearest_squared(const Vec3& q) const {
    const auto c = cell_index(q);
    double best = std::numeric_limits<double>::infinity();
    const long max_r = std::max({dims_[0], dims_[1], dims_[2]});
    for (long r = 0; r <= max_r; ++r) {
      for (long x = c[0] - r; x <= c[0] + r; ++x) {
        if (x < 0 || x >= dims_[0]) continue;
        for (long y = c[1] - r; y <= c[1] + r; ++y) {
          if (y < 0 || y >= dims_[1]) continue;
          const bool edge_xy = std::abs(x - c[0]) == r || std::abs(y - c[1]) == r;
          for (long z = c[2] - r; z <= c[2] + r; ++z) {
            if (z < 0 || z >= dims_[2]) continue;
            if (!edge_xy && std::abs(z - c[2]) != r) continue;
            const std::size_t cell = flat(x, y, z);
            for (std::size_t k = start_[cell]; k < start_[cell + 1]; ++k)
              best = std::min(best, squared_distance(q, cloud_[order_[k]]));
          }
        }
      }
      // Every cell outside this shell is at least r cells away from q.
      const double bound = static_cast<double>(r) * cell_;
      if (best <= bound * bound) break;
    }
    return best;
  }

 private:
  std::array<long, 3> cell_index(const Vec3& p) const {
    std::array<long, 3> c{};
    for (int k = 0; k < 3; ++k) {
      const long v = static_cast<long>(std::floor((p[k] - lo_[k]) / cell_));
      c[k] = std::clamp<long>(v, 0, dims_[k] - 1);
    }
    return c;
  }
  std::size_t flat(long x, long y, long z) const {
    return static_cast<std::size_t>((x * dims_[1] + y) * dims_[2] + z);
  }

  const PointCloud& cloud_;
  Vec3 lo_{}, hi_{};
  double cell_ = 1.0;
  std::array<long, 3> dims_{1, 1, 1};
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
};

/// O(K^2) reference Chamfer distance.
inline double chamfer_brute_force(const PointCloud& p, const PointCloud& q) {
  p.validate("first cloud");
  q.validate("second cloud");
  auto one_way = [](const PointCloud& from, const PointCloud& to) {
    double sum = 0.0;
    for (const auto& a : from.points()) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : to.points()) best = std::min(best, squared_distance(a, b));
      sum += best;
    }
    return sum;
  };
  return one_way(p, q) + one_way(q, p);
}

/// Summed squared nearest-neighbor distances in both directions.
inline double chamfer(const PointCloud& p, const PointCloud& q) {
  p.validate("first cloud");
  q.validate("second cloud");
  const NearestNeighborGrid gp(p);
  const NearestNeighborGrid gq(q);
  double forward = 0.0;
  for (const auto& a : p.points()) forward += gq.nearest_squared(a);
  double backward = 0.0;
  for (const auto& b : q.points()) backward += gp.nearest_squared(b);
  return forward + backward;
}

/// rows = a, cols = b.
inline Matrix chamfer_matrix(const SceneCollection& a, const SceneCollection& b) {
  Matrix out(a.size(), b.size());
  parallel_for(a.size() * b.size(), [&](std::size_t k) {
    const std::size_t i = k / b.size();
    const std::size_t j = k % b.size();
    out(i, j) = chamfer(a[i], b[j]);
  });
  return out;
}

namespace detail {

inline void require_collection(const SceneCollection& c, const char* what) {
  if (c.empty()) throw ValidationError(std::string(what) + " collection is empty");
}

inline SceneCollection canonical(SceneCollection c) {
  std::sort(c.begin(), c.end());
  return c;
}

}  // namespace detail

/// Mean over references of the best Chamfer match among generated clouds.
inline double mmd(const SceneCollection& generated_in, const SceneCollection& reference_in) {
  detail::require_collection(generated_in, "generated");
  detail::require_collection(reference_in, "reference");
  const auto generated = detail::canonical(generated_in);
  const auto reference = detail::canonical(reference_in);
  const Matrix d = chamfer_matrix(generated, reference);
  double sum = 0.0;
  for (std::size_t j = 0; j < reference.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < generated.size(); ++i) best = std::min(best, d(i, j));
    sum += best;
  }
  return sum / static_cast<double>(reference.size());
}

/// Fraction of references that are the nearest match of some generated cloud.
inline double cov(const SceneCollection& generated_in, const SceneCollection& reference_in) {
  detail::require_collection(generated_in, "generated");
  detail::require_collection(reference_in, "reference");
  const auto generated = detail::canonical(generated_in);
  const auto reference = detail::canonical(reference_in);
  const Matrix d = chamfer_matrix(generated, reference);
  std::set<std::size_t> matched;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < reference.size(); ++j)
      if (d(i, j) < d(i, arg)) arg = j;
    matched.insert(arg);
  }
  return static_cast<double>(matched.size()) / static_cast<double>(reference.size());
}

/// Leave-one-out 1-NN accuracy over the union of both collections.
inline double one_nna(const SceneCollection& generated_in, const SceneCollection& reference_in) {
  if (generated_in.size() + reference_in.size() < 2) throw ValidationError("1-NNA needs at least two clouds");
  SceneCollection all = detail::canonical(generated_in);
  const std::size_t ng = all.size();
  for (auto& c : detail::canonical(reference_in)) all.push_back(std::move(c));
  const std::size_t n = all.size();
  Matrix d(n, n);
  parallel_for(n * (n - 1) / 2, [&](std::size_t k) {
    // unrank k into i < j
    std::size_t i = 0;
    std::size_t remaining = k;
    while (remaining >= n - 1 - i) {
      remaining -= n - 1 - i;
      ++i;
    }
    const std::size_t j = i + 1 + remaining;
    d(i, j) = chamfer(all[i], all[j]);
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) d(i, j) = d(j, i);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t arg = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (arg == n || d(i, j) < d(i, arg)) arg = j;
    }
    if ((i < ng) == (arg < ng)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

/// K points spread uniformly by area over the six faces of a rotated box.
inline PointCloud sample_box_surface(const Layout7DoF& b, std::size_t k, std::uint64_t seed) {
  validate_layout(b);
  const double areas[3] = {b.l * b.h, b.w * b.h, b.w * b.l};  // normal along local x, y, z
  const double total = 2 * (areas[0] + areas[1] + areas[2]);
  const double theta = bin_radians(b.angle_bin);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Vec3 half{0.5 * b.w, 0.5 * b.l, 0.5 * b.h};
  auto rng = CounterRng::substream(seed, 0xb0c5);
  PointCloud out;
  for (std::size_t n = 0; n < k; ++n) {
    double pick = rng.uniform() * total;
    int face = 0;
    while (face < 5 && pick >= areas[face / 2]) {
      pick -= areas[face / 2];
      ++face;
    }
    const int axis = face / 2;
    Vec3 local{};
    for (int a = 0; a < 3; ++a) local[a] = a == axis ? (face % 2 ? half[a] : -half[a]) : rng.uniform(-half[a], half[a]);
    out.push_back({b.cx + c * local[0] - s * local[1], b.cy + s * local[0] + c * local[1], b.cz + half[2] + local[2]});
  }
  return out;
}

/// Whitespace-separated xyz triples.
inline PointCloud parse_xyz(const std::string& text, const std::string& path = {}) {
  std::istringstream in(text);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw ValidationError("not a number: " + token, path);
    values.push_back(v);
  }
  if (values.size() % 3 != 0) throw ValidationError("coordinate count is not a multiple of 3", path);
  PointCloud cloud;
  for (std::size_t i = 0; i < values.size(); i += 3) cloud.push_back({values[i], values[i + 1], values[i + 2]});
  cloud.validate(path.c_str());
  return cloud;
}

/// First tensor whose last dimension is 3 ("points" if present).
inline PointCloud cloud_from_tensors(const TensorMap& tensors, const std::string& path = {}) {
  const Tensor* t = nullptr;
  if (auto it = tensors.find("points"); it != tensors.end()) t = &it->second;
  for (auto it = tensors.begin(); !t && it != tensors.end(); ++it)
    if (!it->second.dims.empty() && it->second.dims.back() == 3) t = &it->second;
  if (!t || t->dims.empty() || t->dims.back() != 3) throw ValidationError("no K x 3 tensor found", path);
  PointCloud cloud;
  for (std::size_t i = 0; i + 2 < t->values.size(); i += 3) cloud.push_back({t->values[i], t->values[i + 1], t->values[i + 2]});
  cloud.validate(path.c_str());
  return cloud;
}

inline PointCloud load_cloud(const std::filesystem::path& file) {
  std::ifstream probe(file, std::ios::binary);
  if (!probe) throw IoError("cannot open " + file.string());
  char magic[4] = {};
  probe.read(magic, 4);
  if (probe.gcount() == 4 && std::string(magic, 4) == "P3DW") return cloud_from_tensors(load_tensor_file(file.string()), file.string());
  return parse_xyz(read_text_file(file.string()), file.string());
}

/// Brings a cloud to exactly k points: larger clouds are subsampled without
/// replacement by seed, smaller ones are rejected.
inline PointCloud resample(const PointCloud& cloud, std::size_t k, std::uint64_t seed, const std::string& path = {}) {
  if (cloud.size() < k) throw ValidationError("cloud has " + std::to_string(cloud.size()) + " points, need " + std::to_string(k), path);
  if (cloud.size() == k) return cloud;
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = CounterRng::substream(seed, 0x5a3d);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  std::sort(idx.begin(), idx.begin() + static_cast<long>(k));
  PointCloud out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(cloud[idx[i]]);
  return out;
}

/// Every regular file in `dir`, in filename order, resampled to k points.
inline SceneCollection load_collection(const std::filesystem::path& dir, std::size_t k, std::uint64_t seed = 0) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  SceneCollection out;
  for (const auto& f : files) out.push_back(resample(load_cloud(f), k, seed, f.string()));
  if (out.empty()) throw ValidationError("no point clouds found", dir.string());
  return out;
}

}  // namespace p3d
