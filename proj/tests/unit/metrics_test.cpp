#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "clouds.hpp"
#include "p3d/metrics/metrics.hpp"
#include "p3d/sdf/box_sdf.hpp"

using namespace p3d;
using p3d::testing::line_points;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("p3d_metrics_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Chamfer, SinglePoint) {
  EXPECT_EQ(chamfer(PointCloud({{0, 0, 0}}), PointCloud({{1, 0, 0}})), 2.0);
  EXPECT_EQ(chamfer_brute_force(PointCloud({{0, 0, 0}}), PointCloud({{1, 0, 0}})), 2.0);
}

TEST(Chamfer, IdenticalIsZero) {
  auto rng = CounterRng(1);
  const auto c = p3d::testing::random_cloud(rng, 200);
  EXPECT_EQ(chamfer(c, c), 0.0);
}

TEST(Chamfer, GridMatchesBruteForce) {
  auto rng = CounterRng(2);
  for (int k = 0; k < 100; ++k) {
    const auto a = p3d::testing::random_cloud(rng, 512);
    const std::size_t kb = k % 2 ? 512 : 37;
    auto b = p3d::testing::random_cloud(rng, kb);
    if (k % 5 == 0)
      for (auto& p : b.mutable_points()) p[0] += 3.0;  // far apart
    EXPECT_NEAR(chamfer(a, b), chamfer_brute_force(a, b), 1e-9);
  }
}

TEST(Chamfer, DegenerateLayouts) {
  // All points coincide, or lie on a plane: grid cells collapse along axes.
  PointCloud same, plane;
  for (int i = 0; i < 50; ++i) {
    same.push_back({0.25, 0.25, 0.25});
    plane.push_back({0.01 * i, 0.02 * (i % 7), 0.0});
  }
  EXPECT_NEAR(chamfer(same, plane), chamfer_brute_force(same, plane), 1e-12);
  EXPECT_NEAR(chamfer(plane, plane), 0.0, 1e-15);
}

TEST(Chamfer, SymmetricNonNegative) {
  auto rng = CounterRng(3);
  for (int k = 0; k < 20; ++k) {
    const auto a = p3d::testing::random_cloud(rng, 64);
    const auto b = p3d::testing::random_cloud(rng, 80);
    EXPECT_DOUBLE_EQ(chamfer(a, b), chamfer(b, a));
    EXPECT_GT(chamfer(a, b), 0.0);
  }
}

TEST(Chamfer, MultisetSensitivity) {
  const PointCloud a({{0, 0, 0}, {1, 0, 0}});
  const PointCloud b({{1, 0, 0}, {0, 0, 0}});
  EXPECT_EQ(chamfer(a, b), 0.0);
  EXPECT_THROW(chamfer(a, PointCloud{}), ValidationError);
}

TEST(Chamfer, Matrix) {
  const auto a = line_points({0, 1});
  const auto b = line_points({0, 2, 3});
  const Matrix m = chamfer_matrix(a, b);
  ASSERT_EQ(m.rows(), 2u);
  ASSERT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_EQ(m(1, 1), 2.0);
  EXPECT_EQ(m(0, 2), 18.0);
}

TEST(Mmd, IdentityAndSingleReference) {
  auto rng = CounterRng(4);
  SceneCollection x;
  for (int i = 0; i < 5; ++i) x.push_back(p3d::testing::random_cloud(rng, 40));
  EXPECT_EQ(mmd(x, x), 0.0);
  const SceneCollection one = {x[2]};
  EXPECT_EQ(mmd(x, one), 0.0);
  const SceneCollection lone = line_points({0.5});
  const SceneCollection gen = line_points({0, 2, 3});
  EXPECT_EQ(mmd(gen, lone), 0.5);
}

TEST(Mmd, MatchesExhaustiveOracle) {
  auto rng = CounterRng(5);
  for (int trial = 0; trial < 10; ++trial) {
    SceneCollection g, r;
    for (int i = 0; i < 3; ++i) {
      g.push_back(p3d::testing::random_cloud(rng, 30));
      r.push_back(p3d::testing::random_cloud(rng, 30));
    }
    double oracle = 0.0;
    for (const auto& ref : r) {
      double best = 1e300;
      for (const auto& gen : g) best = std::min(best, chamfer_brute_force(gen, ref));
      oracle += best;
    }
    EXPECT_NEAR(mmd(g, r), oracle / 3.0, 1e-12);
  }
}

TEST(Cov, Identity) {
  auto rng = CounterRng(6);
  SceneCollection x;
  for (int i = 0; i < 6; ++i) x.push_back(p3d::testing::random_cloud(rng, 20));
  EXPECT_EQ(cov(x, x), 1.0);
}

TEST(Cov, HandEnumerated) {
  const auto ref = line_points({0, 1, 2, 3});
  // 0.1 -> 0, 0.2 -> 0, 2.9 -> 3, 3.2 -> 3
  EXPECT_EQ(cov(line_points({0.1, 0.2, 2.9, 3.2}), ref), 0.5);
  // 0.5 ties between 0 and 1 and goes to 0; 1.4 -> 1; 2.6 -> 3; 9 -> 3
  EXPECT_EQ(cov(line_points({0.5, 1.4, 2.6, 9}), ref), 0.75);
  EXPECT_EQ(cov(line_points({0.5, 0.1}), ref), 0.25);
  EXPECT_EQ(cov(line_points({1.1, 2.1, -5, 3.3}), ref), 1.0);
  EXPECT_EQ(cov(line_points({7}), ref), 0.25);
}

TEST(OneNna, HandEnumerated) {
  EXPECT_EQ(one_nna(line_points({0, 2}), line_points({3, 10})), 0.5);
  EXPECT_EQ(one_nna(line_points({0, 3}), line_points({1, 10})), 0.0);
  EXPECT_EQ(one_nna(line_points({0, 1}), line_points({10, 12})), 1.0);
  EXPECT_THROW(one_nna(line_points({0}), {}), ValidationError);
}

TEST(OneNna, SeparatedClusters) {
  auto rng = CounterRng(7);
  SceneCollection a, b;
  for (int i = 0; i < 20; ++i) {
    a.push_back(p3d::testing::random_cloud(rng, 32));
    auto far = p3d::testing::random_cloud(rng, 32);
    for (auto& p : far.mutable_points()) p[2] += 10.0;
    b.push_back(far);
  }
  EXPECT_EQ(one_nna(a, b), 1.0);
}

TEST(OneNna, SameGeneratorNearHalf) {
  const auto x = p3d::testing::generator_collection(1, 100, 48);
  const auto y = p3d::testing::generator_collection(2, 100, 48);
  const double v = one_nna(x, y);
  EXPECT_GE(v, 0.35);
  EXPECT_LE(v, 0.65);
}

TEST(Metrics, PermutationInvariant) {
  auto rng = CounterRng(8);
  SceneCollection g, r;
  for (int i = 0; i < 6; ++i) {
    g.push_back(p3d::testing::random_cloud(rng, 16));
    r.push_back(p3d::testing::random_cloud(rng, 16));
  }
  // Duplicates exercise the tie-break.
  g.push_back(g[0]);
  r.push_back(g[0]);
  const double m = mmd(g, r), c = cov(g, r), n = one_nna(g, r);
  for (int trial = 0; trial < 5; ++trial) {
    std::rotate(g.begin(), g.begin() + 2, g.end());
    std::reverse(r.begin(), r.end());
    EXPECT_EQ(mmd(g, r), m);
    EXPECT_EQ(cov(g, r), c);
    EXPECT_EQ(one_nna(g, r), n);
  }
}

TEST(Metrics, EmptyCollections) {
  const auto x = line_points({0});
  EXPECT_THROW(mmd(x, {}), ValidationError);
  EXPECT_THROW(mmd({}, x), ValidationError);
  EXPECT_THROW(cov({}, x), ValidationError);
}

TEST(BoxSurface, PointsLieOnSurface) {
  const Layout7DoF b{1.2, 0.7, 0.9, 0.4, -1.1, 0.3, 5};
  const auto cloud = sample_box_surface(b, 2000, 3);
  ASSERT_EQ(cloud.size(), 2000u);
  for (const auto& p : cloud.points()) EXPECT_LT(std::abs(layout_sdf(b, p)), 1e-9);
}

TEST(BoxSurface, FaceCountsFollowArea) {
  const Layout7DoF b{1, 2, 3, 0, 0, 0, 0};
  const std::size_t k = 60000;
  const auto cloud = sample_box_surface(b, k, 11);
  const double half[3] = {0.5, 1.0, 1.5};
  std::array<double, 6> counts{};
  for (const auto& p : cloud.points()) {
    const double local[3] = {p[0], p[1], p[2] - 1.5};
    for (int a = 0; a < 3; ++a) {
      if (std::abs(std::abs(local[a]) - half[a]) < 1e-12) {
        ++counts[static_cast<std::size_t>(2 * a + (local[a] > 0))];
        break;
      }
    }
  }
  const double areas[3] = {2 * 3, 1 * 3, 1 * 2};
  const double total = 2 * (6 + 3 + 2);
  for (int f = 0; f < 6; ++f) {
    const double p = areas[f / 2] / total;
    const double sigma = std::sqrt(k * p * (1 - p));
    EXPECT_NEAR(counts[static_cast<std::size_t>(f)], k * p, 3 * sigma) << f;
  }
}

TEST(BoxSurface, Reproducible) {
  const Layout7DoF b{1, 1, 1, 0, 0, 0, 3};
  EXPECT_EQ(sample_box_surface(b, 100, 4), sample_box_surface(b, 100, 4));
  EXPECT_NE(sample_box_surface(b, 100, 4), sample_box_surface(b, 100, 5));
}

TEST(Loaders, ParseXyz) {
  const auto c = parse_xyz("0 0 0\n1 2 3\n  -1.5e0 4 5 ");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[2][0], -1.5);
  EXPECT_THROW(parse_xyz("1 2"), ValidationError);
  EXPECT_THROW(parse_xyz("1 2 x"), ValidationError);
  EXPECT_THROW(parse_xyz(""), ValidationError);
  EXPECT_THROW(parse_xyz("1 2 nan"), ValidationError);
}

TEST(Loaders, TensorClouds) {
  TensorMap t;
  t["aux"] = Tensor{{2}, {1, 2}};
  t["pts"] = Tensor{{2, 3}, {0, 0, 0, 1, 1, 1}};
  EXPECT_EQ(cloud_from_tensors(t).size(), 2u);
  t["points"] = Tensor{{1, 3}, {5, 5, 5}};
  EXPECT_EQ(cloud_from_tensors(t)[0][0], 5.0);
  EXPECT_THROW(cloud_from_tensors(TensorMap{{"a", Tensor{{4}, {1, 2, 3, 4}}}}), ValidationError);
}

TEST(Loaders, Resample) {
  auto rng = CounterRng(9);
  const auto c = p3d::testing::random_cloud(rng, 100);
  EXPECT_EQ(resample(c, 100, 1), c);
  const auto r = resample(c, 10, 1);
  EXPECT_EQ(r.size(), 10u);
  for (const auto& p : r.points()) EXPECT_NE(std::find(c.points().begin(), c.points().end(), p), c.points().end());
  EXPECT_EQ(resample(c, 10, 1), r);
  EXPECT_THROW(resample(c, 101, 1), ValidationError);
}

TEST(Loaders, CollectionInFilenameOrder) {
  const auto dir = scratch_dir("order");
  std::ofstream(dir / "b.xyz") << "1 0 0\n";
  std::ofstream(dir / "a.xyz") << "0 0 0\n";
  TensorMap t;
  t["points"] = Tensor{{1, 3}, {2, 0, 0}};
  save_tensor_file((dir / "c.p3dw").string(), t);
  const auto col = load_collection(dir, 1);
  ASSERT_EQ(col.size(), 3u);
  EXPECT_EQ(col[0][0][0], 0.0);
  EXPECT_EQ(col[1][0][0], 1.0);
  EXPECT_EQ(col[2][0][0], 2.0);
  EXPECT_THROW(load_collection(dir, 2), ValidationError);
  EXPECT_THROW(load_collection(dir / "missing", 1), IoError);
  EXPECT_THROW(load_collection(scratch_dir("empty"), 1), ValidationError);
  std::filesystem::remove_all(dir);
}
