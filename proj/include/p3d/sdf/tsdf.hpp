#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "p3d/core/error.hpp"
#include "p3d/core/parallel.hpp"
#include "p3d/core/rng.hpp"
#include "p3d/io/tensor_file.hpp"
#include "p3d/metrics/point_cloud.hpp"
#include "p3d/sdf/box_sdf.hpp"

namespace p3d {

inline constexpr std::size_t kSdfResolution = 64;

inline constexpr double default_truncation(std::size_t resolution = kSdfResolution) {
  return 3.0 * (2.0 / static_cast<double>(resolution));
}

/// Truncated SDF sampled at voxel centers of the cube [-1, 1]^3.
struct TSDFGrid {
  std::size_t resolution = kSdfResolution;
  double tau = default_truncation();
  std::vector<double> values;  // x-major: index = (i * R + j) * R + k

  double voxel() const { return 2.0 / static_cast<double>(resolution); }
  double center(std::size_t i) const { return -1.0 + (static_cast<double>(i) + 0.5) * voxel(); }
  Vec3 position(std::size_t i, std::size_t j, std::size_t k) const { return {center(i), center(j), center(k)}; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * resolution + j) * resolution + k; }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }
};

using SdfFunction = std::function<double(const Vec3&)>;

inline TSDFGrid grid_from_sdf(const SdfFunction& fn, double tau = default_truncation(),
                              std::size_t resolution = kSdfResolution) {
  if (!(tau > 0)) throw ValidationError("truncation must be positive");
  if (resolution < 2) throw ValidationError("resolution must be at least 2");
  TSDFGrid g;
  g.resolution = resolution;
  g.tau = tau;
  g.values.assign(resolution * resolution * resolution, 0.0);
  std::vector<char> bad(resolution, 0);
  parallel_for(resolution, [&](std::size_t i) {
    for (std::size_t j = 0; j < resolution; ++j)
      for (std::size_t k = 0; k < resolution; ++k) {
        const double v = fn(g.position(i, j, k));
        if (!std::isfinite(v)) bad[i] = 1;
        g.values[g.index(i, j, k)] = std::clamp(v, -tau, tau);
      }
  });
  if (std::find(bad.begin(), bad.end(), 1) != bad.end()) throw NumericError("SDF returned a non-finite sample");
  return g;
}

namespace detail {

struct SignEdge {
  std::size_t a;  // flat voxel indices
  std::size_t b;
  Vec3 pa;
  Vec3 pb;
};

inline bool crosses(double u, double v) { return (u < 0) != (v < 0); }

inline std::vector<SignEdge> sign_edges(const TSDFGrid& g) {
  std::vector<SignEdge> out;
  const std::size_t r = g.resolution;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t k = 0; k < r; ++k) {
        const std::size_t here = g.index(i, j, k);
        const std::size_t n[3][3] = {{i + 1, j, k}, {i, j + 1, k}, {i, j, k + 1}};
        for (const auto& c : n) {
          if (c[0] >= r || c[1] >= r || c[2] >= r) continue;
          const std::size_t there = g.index(c[0], c[1], c[2]);
          if (crosses(g.values[here], g.values[there]))
            out.push_back({here, there, g.position(i, j, k), g.position(c[0], c[1], c[2])});
        }
      }
  return out;
}

template <typename Fn>
Vec3 bisect(const Vec3& pa, const Vec3& pb, Fn&& f) {
  double lo = 0.0;
  double hi = 1.0;
  const bool neg_lo = f(0.0) < 0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0) == neg_lo)
      lo = mid;
    else
      hi = mid;
  }
  const double t = 0.5 * (lo + hi);
  return {pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]), pa[2] + t * (pb[2] - pa[2])};
}

}  // namespace detail

/// K surface points: edges between sign-differing voxel centers are drawn
/// uniformly by seed and the zero of the linear interpolant along each is
/// located by bisection.
inline PointCloud surface_points(const TSDFGrid& g, std::size_t k, std::uint64_t seed) {
  const auto edges = detail::sign_edges(g);
  if (edges.empty()) throw ValidationError("TSDF grid has no zero crossing");
  auto rng = CounterRng::substream(seed, 0x5df);
  PointCloud out;
  for (std::size_t n = 0; n < k; ++n) {
    const auto& e = edges[rng.below(edges.size())];
    const double va = g.values[e.a];
    const double vb = g.values[e.b];
    out.push_back(detail::bisect(e.pa, e.pb, [&](double t) { return va + t * (vb - va); }));
  }
  return out;
}

/// Same edge selection as above, but the bisection runs on the exact field.
inline PointCloud surface_points(const TSDFGrid& g, const SdfFunction& fn, std::size_t k, std::uint64_t seed) {
  const auto edges = detail::sign_edges(g);
  if (edges.empty()) throw ValidationError("TSDF grid has no zero crossing");
  auto rng = CounterRng::substream(seed, 0x5df);
  PointCloud out;
  for (std::size_t n = 0; n < k; ++n) {
    const auto& e = edges[rng.below(edges.size())];
    out.push_back(detail::bisect(e.pa, e.pb, [&](double t) {
      return fn({e.pa[0] + t * (e.pb[0] - e.pa[0]), e.pa[1] + t * (e.pb[1] - e.pa[1]), e.pa[2] + t * (e.pb[2] - e.pa[2])});
    }));
  }
  return out;
}

/// Voxels with negative value.
inline std::vector<bool> occupancy(const TSDFGrid& g) {
  std::vector<bool> out(g.values.size());
  for (std::size_t i = 0; i < g.values.size(); ++i) out[i] = g.values[i] < 0;
  return out;
}

inline TensorMap tsdf_to_tensors(const TSDFGrid& g) {
  const auto r = static_cast<std::uint32_t>(g.resolution);
  Tensor values{{r, r, r}, std::vector<float>(g.values.begin(), g.values.end())};
  Tensor meta{{2}, {static_cast<float>(g.resolution), static_cast<float>(g.tau)}};
  return {{"tsdf/values", std::move(values)}, {"tsdf/meta", std::move(meta)}};
}

inline TSDFGrid tsdf_from_tensors(const TensorMap& t) {
  const auto v = t.find("tsdf/values");
  const auto m = t.find("tsdf/meta");
  if (v == t.end() || m == t.end()) throw ValidationError("missing tsdf/values or tsdf/meta");
  if (m->second.values.size() != 2) throw ValidationError("tsdf/meta must hold [resolution, tau]");
  TSDFGrid g;
  g.resolution = static_cast<std::size_t>(m->second.values[0]);
  g.tau = m->second.values[1];
  const auto& d = v->second.dims;
  if (d.size() != 3 || d[0] != g.resolution || d[1] != g.resolution || d[2] != g.resolution)
    throw ValidationError("tsdf/values shape does not match resolution");
  g.values.assign(v->second.values.begin(), v->second.values.end());
  return g;
}

}  // namespace p3d
