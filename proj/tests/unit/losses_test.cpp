#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "p3d/losses/losses.hpp"

using namespace p3d;

namespace {

LatentDistribution dist(const std::vector<double>& mu, const std::vector<double>& sigma, std::size_t rows = 1) {
  const std::size_t cols = mu.size() / rows;
  LatentDistribution d{Matrix(rows, cols), Matrix(rows, cols)};
  std::copy(mu.begin(), mu.end(), d.mu.data().begin());
  std::copy(sigma.begin(), sigma.end(), d.sigma.data().begin());
  return d;
}

Matrix uniform_logits(std::size_t n) { return Matrix(n, kRotationBins); }

}  // namespace

TEST(Kl, StandardNormalIsZero) {
  EXPECT_EQ(kl_loss(dist(std::vector<double>(64, 0.0), std::vector<double>(64, 1.0))), 0.0);
}

TEST(Kl, UnitMean) {
  EXPECT_NEAR(kl_loss(dist({1.0}, {1.0})), 0.5, 1e-12);
  std::vector<double> mu(64, 0.0);
  mu[10] = 1.0;
  EXPECT_NEAR(kl_loss(dist(mu, std::vector<double>(64, 1.0))), 0.5, 1e-12);
}

TEST(Kl, AveragedOverNodes) {
  EXPECT_NEAR(kl_loss(dist({1.0, 0.0}, {1.0, 1.0}, 2)), 0.25, 1e-12);
}

TEST(Kl, NonNegative) {
  auto rng = CounterRng(4);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> mu(8), sigma(8);
    for (auto& m : mu) m = rng.normal();
    for (auto& s : sigma) s = std::exp(rng.normal());
    EXPECT_GE(kl_loss(dist(mu, sigma, 2)), 0.0);
  }
}

TEST(Kl, MatchesMonteCarlo) {
  auto rng = CounterRng(12);
  for (int k = 0; k < 5; ++k) {
    const double mu = rng.uniform(-1.5, 1.5);
    const double sigma = rng.uniform(0.5, 1.5);
    EXPECT_NEAR(kl_loss(dist({mu}, {sigma})), p3d::testing::kl_monte_carlo(mu, sigma, 200000, 100 + k), 2e-2);
  }
}

TEST(Kl, RejectsBadSigma) {
  EXPECT_THROW(kl_loss(dist({0.0}, {0.0})), ValidationError);
  EXPECT_THROW(kl_loss(dist({0.0}, {-1.0})), ValidationError);
  LatentDistribution d{Matrix(1, 2), Matrix(2, 1)};
  EXPECT_THROW(kl_loss(d), ValidationError);
}

TEST(LayoutRec, OffByOne) {
  const std::vector<Layout7DoF> gt = {{1, 1, 1, 0, 0, 0, 0}};
  Matrix boxes = boxes_matrix(gt);
  boxes(0, 3) += 1.0;
  Matrix logits = uniform_logits(1);
  logits(0, 0) = 200.0;
  const auto r = layout_rec_loss(gt, boxes, logits);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.grad_boxes(0, 3), 1.0);
  EXPECT_EQ(r.grad_boxes(0, 0), 0.0);
}

TEST(LayoutRec, PerfectPrediction) {
  const std::vector<Layout7DoF> gt = {{1, 2, 1, 0.5, 0, 0, 3}, {1, 1, 1, 2, 0, 0, 7}};
  Matrix logits = uniform_logits(2);
  logits(0, 3) = 100;
  logits(1, 7) = 100;
  const auto r = layout_rec_loss(gt, boxes_matrix(gt), logits);
  EXPECT_LT(r.value, 1e-30);
  for (double g : r.grad_boxes.data()) EXPECT_EQ(g, 0.0);
}

TEST(LayoutRec, UniformLogitsCostLogBins) {
  const std::vector<Layout7DoF> gt = {{1, 1, 1, 0, 0, 0, 5}};
  EXPECT_NEAR(layout_rec_loss(gt, boxes_matrix(gt), uniform_logits(1)).value, std::log(24.0), 1e-12);
}

TEST(LayoutRec, ShapeErrors) {
  const std::vector<Layout7DoF> gt(2);
  EXPECT_THROW(layout_rec_loss(gt, Matrix(1, 6), uniform_logits(2)), ValidationError);
  EXPECT_THROW(layout_rec_loss(gt, Matrix(2, 5), uniform_logits(2)), ValidationError);
  EXPECT_THROW(layout_rec_loss(gt, Matrix(2, 6), uniform_logits(1)), ValidationError);
  std::vector<Layout7DoF> far(1);
  far[0].angle_bin = 10;
  EXPECT_THROW(layout_rec_loss(far, Matrix(1, 6), Matrix(1, 4)), ValidationError);
}

TEST(IouReg, Examples) {
  const std::vector<Layout7DoF> gt = {{2, 2, 2, 0, 0, 0, 0}};
  EXPECT_EQ(iou_reg_loss(gt, boxes_matrix(gt)).value, 0.0);
  Matrix shifted = boxes_matrix(gt);
  shifted(0, 3) = 1.0;
  EXPECT_NEAR(iou_reg_loss(gt, shifted).value, 2.0 / 3.0, 1e-15);
}

TEST(IouReg, SummedNotAveraged) {
  const std::vector<Layout7DoF> gt = {{1, 1, 1, 0, 0, 0, 0}, {1, 1, 1, 5, 0, 0, 0}, {1, 1, 1, 9, 0, 0, 0}};
  Matrix far = boxes_matrix(gt);
  for (std::size_t i = 0; i < 3; ++i) far(i, 4) = 10.0;
  const auto r = iou_reg_loss(gt, far);
  EXPECT_EQ(r.value, 3.0);
  for (double g : r.grad_boxes.data()) EXPECT_EQ(g, 0.0);
}

TEST(IouReg, BoundedByNodeCount) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto inst = p3d::testing::random_loss_instance(s);
    const double v = iou_reg_loss(inst.gt, inst.boxes).value;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, static_cast<double>(inst.gt.size()));
    EXPECT_GE(layout_rec_loss(inst.gt, inst.boxes, inst.logits).value, 0.0);
  }
}

TEST(Gradients, MatchFiniteDifferences) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = p3d::testing::check_loss_gradients(p3d::testing::random_loss_instance(s));
    EXPECT_LT(r.rec_boxes, 1e-4) << s;
    EXPECT_LT(r.rec_logits, 1e-4) << s;
    EXPECT_LT(r.iou_boxes, 1e-4) << s;
  }
}

TEST(Gradients, ContainedPredictionPullsOutward) {
  // Prediction strictly inside GT: growing any extent raises IoU.
  std::array<double, 6> g{};
  const double iou = iou_with_gradient(std::array<double, 6>{1, 1, 1, 0, 0, 0.5}, Layout7DoF{2, 2, 2, 0, 0, 0, 0}, g);
  EXPECT_NEAR(iou, 1.0 / 8.0, 1e-15);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_GT(g[k], 0.0);
  for (std::size_t k = 3; k < 6; ++k) EXPECT_EQ(g[k], 0.0);
}

TEST(Combined, LayoutAndTotal) {
  const auto inst = p3d::testing::random_loss_instance(3);
  const auto rec = layout_rec_loss(inst.gt, inst.boxes, inst.logits);
  const auto reg = iou_reg_loss(inst.gt, inst.boxes);
  EXPECT_EQ(layout_loss(inst.gt, inst.boxes, inst.logits, 0.0).value, rec.value);
  const auto both = layout_loss(inst.gt, inst.boxes, inst.logits, 0.01);
  EXPECT_NEAR(both.value, rec.value + 0.01 * reg.value, 1e-14);
  EXPECT_NEAR(both.grad_boxes(0, 0), rec.grad_boxes(0, 0) + 0.01 * reg.grad_boxes(0, 0), 1e-15);
  EXPECT_DOUBLE_EQ(layout_loss_value(2.0, 3.0, 0.01), 2.03);

  const LossWeights w;
  EXPECT_EQ(w.lambda_kl, 1.0);
  EXPECT_EQ(w.lambda_layout, 1.0);
  EXPECT_EQ(w.lambda_shape, 1.0);
  EXPECT_EQ(w.eta, 0.01);
  EXPECT_DOUBLE_EQ(total_loss(1, 2, 3), 6.0);
  EXPECT_DOUBLE_EQ(total_loss(1, 2, 3, {2, 0, 1, 0}), 5.0);
  EXPECT_DOUBLE_EQ(total_loss(2, 4, 6), 2 * total_loss(1, 2, 3));
}
