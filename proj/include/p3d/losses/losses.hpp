#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "p3d/core/error.hpp"
#include "p3d/core/matrix.hpp"
#include "p3d/geometry/layout.hpp"
#include "p3d/nn/models.hpp"

namespace p3d {

struct LossWeights {
  double lambda_kl = 1.0;
  double lambda_layout = 1.0;
  double lambda_shape = 1.0;
  double eta = 0.01;
};

/// KL(N(mu, sigma^2) || N(0, I)) summed over latent dims, averaged over nodes.
inline double kl_loss(const LatentDistribution& d) {
  if (d.mu.rows() != d.sigma.rows() || d.mu.cols() != d.sigma.cols()) throw ValidationError("mu/sigma shape mismatch");
  if (d.mu.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < d.mu.rows(); ++i) {
    double node = 0.0;
    for (std::size_t k = 0; k < d.mu.cols(); ++k) {
      const double m = d.mu(i, k);
      const double s = d.sigma(i, k);
      if (!(s > 0)) throw ValidationError("sigma must be strictly positive");
      node += 0.5 * (m * m + s * s - 1.0 - 2.0 * std::log(s));
    }
    total += node;
  }
  return total / static_cast<double>(d.mu.rows());
}

/// Loss value with gradients w.r.t. predicted box parameters (N x 6, order
/// w, l, h, cx, cy, cz) and, where applicable, rotation logits (N x 24).
struct LayoutLossResult {
  double value = 0.0;
  Matrix grad_boxes;
  Matrix grad_logits;
};

inline std::array<double, 6> box_params(const Layout7DoF& b) { return {b.w, b.l, b.h, b.cx, b.cy, b.cz}; }

inline Layout7DoF box_from_params(std::span<const double> p, int bin = 0) {
  return {p[0], p[1], p[2], p[3], p[4], p[5], bin};
}

inline Matrix boxes_matrix(std::span<const Layout7DoF> layouts) {
  Matrix m(layouts.size(), 6);
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    const auto p = box_params(layouts[i]);
    std::copy(p.begin(), p.end(), m.row(i).begin());
  }
  return m;
}

namespace detail {
inline void check_layout_shapes(std::size_t n, const Matrix& boxes) {
  if (boxes.rows() != n || boxes.cols() != 6) throw ValidationError("predicted boxes must be N x 6");
}
}  // namespace detail

/// Reconstruction loss (1/N) sum_i (|b_gt - b|_1 - log softmax(logits_i)[gt_bin]).
/// The L1 subgradient at equality is 0.
inline LayoutLossResult layout_rec_loss(std::span<const Layout7DoF> gt, const Matrix& boxes, const Matrix& logits) {
  const std::size_t n = gt.size();
  detail::check_layout_shapes(n, boxes);
  if (logits.rows() != n || logits.cols() == 0) throw ValidationError("rotation logits must be N x bins");
  LayoutLossResult r{0.0, Matrix(n, 6), Matrix(n, logits.cols())};
  if (n == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto target = box_params(gt[i]);
    double l1 = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      const double diff = boxes(i, k) - target[k];
      l1 += std::abs(diff);
      r.grad_boxes(i, k) = diff > 0 ? inv_n : (diff < 0 ? -inv_n : 0.0);
    }
    const auto row = logits.row(i);
    const auto bin = static_cast<std::size_t>(gt[i].angle_bin);
    if (bin >= row.size()) throw ValidationError("GT bin outside logit range");
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    const double ce = log_z - row[bin];
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double p = std::exp(row[k] - log_z);
      r.grad_logits(i, k) = (p - (k == bin ? 1.0 : 0.0)) * inv_n;
    }
    r.value += (l1 + ce) * inv_n;
  }
  return r;
}

namespace detail {

struct AxisOverlap {
  double overlap = 0.0;
  double d_lo = 0.0;  // d overlap / d (predicted interval start)
  double d_hi = 0.0;  // d overlap / d (predicted interval end)
};

inline AxisOverlap axis_overlap(double p_lo, double p_hi, double g_lo, double g_hi) {
  const double o = std::min(p_hi, g_hi) - std::max(p_lo, g_lo);
  if (o <= 0.0) return {};
  return {o, p_lo > g_lo ? -1.0 : 0.0, p_hi < g_hi ? 1.0 : 0.0};
}

}  // namespace detail

/// IoU of one predicted box (params p) against a target box with gradient
/// w.r.t. p. Gradient is 0 without overlap and at interval breakpoints.
inline double iou_with_gradient(std::span<const double> p, const Layout7DoF& g, std::span<double> grad) {
  const double w = p[0], l = p[1], h = p[2], cx = p[3], cy = p[4], cz = p[5];
  std::fill(grad.begin(), grad.end(), 0.0);
  if (!(w > 0 && l > 0 && h > 0)) return 0.0;
  const auto ax = detail::axis_overlap(cx - w / 2, cx + w / 2, g.cx - g.w / 2, g.cx + g.w / 2);
  const auto ay = detail::axis_overlap(cy - l / 2, cy + l / 2, g.cy - g.l / 2, g.cy + g.l / 2);
  const auto az = detail::axis_overlap(cz, cz + h, g.cz, g.cz + g.h);
  const double inter = ax.overlap * ay.overlap * az.overlap;
  if (inter <= 0.0) return 0.0;
  const double vp = w * l * h;
  const double vg = g.w * g.l * g.h;
  const double uni = vp + vg - inter;

  // d inter / d params
  const double yz = ay.overlap * az.overlap;
  const double xz = ax.overlap * az.overlap;
  const double xy = ax.overlap * ay.overlap;
  const std::array<double, 6> d_inter = {
      yz * 0.5 * (ax.d_hi - ax.d_lo), xz * 0.5 * (ay.d_hi - ay.d_lo), xy * az.d_hi,
      yz * (ax.d_lo + ax.d_hi),       xz * (ay.d_lo + ay.d_hi),       xy * (az.d_lo + az.d_hi)};
  const std::array<double, 6> d_vol = {l * h, w * h, w * l, 0.0, 0.0, 0.0};
  const double inv_u2 = 1.0 / (uni * uni);
  for (std::size_t k = 0; k < 6; ++k) grad[k] = (d_inter[k] * (vp + vg) - inter * d_vol[k]) * inv_u2;
  return std::min(inter / uni, 1.0);
}

/// Regularizer sum_i (1 - IoU(gt_i, pred_i)), summed over nodes.
inline LayoutLossResult iou_reg_loss(std::span<const Layout7DoF> gt, const Matrix& boxes) {
  const std::size_t n = gt.size();
  detail::check_layout_shapes(n, boxes);
  LayoutLossResult r{0.0, Matrix(n, 6), Matrix()};
  std::array<double, 6> g{};
  for (std::size_t i = 0; i < n; ++i) {
    const double iou = iou_with_gradient(boxes.row(i), gt[i], g);
    r.value += 1.0 - iou;
    for (std::size_t k = 0; k < 6; ++k) r.grad_boxes(i, k) = -g[k];
  }
  return r;
}

/// L_layout = L_rec + eta * L_iou, gradients combined.
inline LayoutLossResult layout_loss(std::span<const Layout7DoF> gt, const Matrix& boxes, const Matrix& logits,
                                    double eta) {
  auto rec = layout_rec_loss(gt, boxes, logits);
  if (eta == 0.0) return rec;
  const auto reg = iou_reg_loss(gt, boxes);
  rec.value += eta * reg.value;
  for (std::size_t i = 0; i < rec.grad_boxes.data().size(); ++i) rec.grad_boxes.data()[i] += eta * reg.grad_boxes.data()[i];
  return rec;
}

inline double layout_loss_value(double rec, double iou, double eta) { return rec + eta * iou; }

/// L = lambda_KL L_KL + lambda_layout L_layout + lambda_shape L_shape.
inline double total_loss(double kl, double layout, double shape, const LossWeights& w = {}) {
  return w.lambda_kl * kl + w.lambda_layout * layout + w.lambda_shape * shape;
}

}  // namespace p3d
