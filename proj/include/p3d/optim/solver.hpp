#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "p3d/consistency/checker.hpp"
#include "p3d/core/error.hpp"
#include "p3d/core/log.hpp"
#include "p3d/core/matrix.hpp"
#include "p3d/core/rng.hpp"
#include "p3d/geometry/collision.hpp"
#include "p3d/geometry/layout.hpp"
#include "p3d/graph/scene_graph.hpp"
#include "p3d/losses/losses.hpp"
#include "p3d/optim/category_sizes.hpp"
#include "p3d/optim/dual.hpp"

namespace p3d {

/// Room extents in meters; the floor is centered at the origin.
struct RoomBounds {
  double width = 6.0;   // along x
  double length = 6.0;  // along y
  double height = 3.0;
};

struct SolverConfig {
  std::size_t max_iters = 2000;
  double step_size = 0.01;
  double momentum = 0.9;
  double eta = 0.01;
  double overlap_weight = 1.0;
  double rule_weight = 1.0;
  RoomBounds bounds;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;

  // Hinge slack added on top of each rule threshold.
  double separation_slack = 0.05;
  double iou_slack = 0.05;
  double ratio_slack = 0.05;
  double distance_slack = 0.05;
  // Footprints are padded by this much per side inside the overlap penalty
  // so the optimum leaves a gap instead of touching faces.
  double overlap_margin = 0.01;
  double size_prior_weight = 0.1;
  double bounds_weight = 10.0;
  double min_extent = 0.05;
  std::size_t rebin_interval = 100;
  std::size_t patience = 200;
  // Initial centers are drawn inside this fraction of the room footprint.
  double init_spread = 0.5;
  RuleThresholds thresholds;
  double collision_threshold = kDefaultCollisionThreshold;

  void validate() const {
    if (!(step_size > 0)) throw ValidationError("step_size must be positive");
    if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
    if (!(momentum >= 0 && momentum < 1)) throw ValidationError("momentum must lie in [0, 1)");
    if (eta < 0 || overlap_weight < 0 || rule_weight < 0) throw ValidationError("weights must be nonnegative");
    if (!(bounds.width > 0 && bounds.length > 0 && bounds.height > 0)) throw ValidationError("room bounds must be positive");
  }
};

/// Per-iteration record of a run; all columns have equal length.
struct SolveTrace {
  std::vector<double> objective;
  std::vector<double> collision_volume;
  std::vector<std::size_t> violations;

  std::size_t size() const noexcept { return objective.size(); }

  void push(double obj, double vol, std::size_t viol) {
    objective.push_back(obj);
    collision_volume.push_back(vol);
    violations.push_back(viol);
  }

  std::string to_csv() const {
    std::string out = "iter,objective,collision_volume,violations\n";
    char line[128];
    for (std::size_t i = 0; i < size(); ++i) {
      std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%zu\n", i, objective[i], collision_volume[i], violations[i]);
      out += line;
    }
    return out;
  }
};

struct SolveResult {
  std::vector<Layout7DoF> layouts;
  SolveTrace trace;
  double best_objective = 0.0;
  bool converged = false;
  bool feasible = false;           // every ruled edge satisfied and no colliding pair
  bool bounds_infeasible = false;  // total default footprint exceeds the floor area
};

inline std::size_t rule_violations(const SceneGraph& g, std::span<const Layout7DoF> layouts, const RuleThresholds& th) {
  std::size_t n = 0;
  for (const auto& e : g.edges()) {
    const Rule r = g.vocab().relation(e.predicate).rule;
    if (r == Rule::None) continue;
    if (!check_rule(r, layouts[static_cast<std::size_t>(e.subject)], layouts[static_cast<std::size_t>(e.object)], th))
      ++n;
  }
  return n;
}

/// Fraction of scenes with at least one colliding pair.
inline double collision_rate(std::span<const std::vector<Layout7DoF>> scenes,
                             double threshold = kDefaultCollisionThreshold) {
  if (scenes.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& s : scenes)
    if (collision_matrix(s, threshold).any()) ++hit;
  return static_cast<double>(hit) / static_cast<double>(scenes.size());
}

namespace detail {

/// Hinge penalty for one ruled edge, built from the rule inequality with the
/// rule threshold tightened by the configured slack.
template <typename T>
T rule_penalty(Rule rule, const BasicLayout<T>& bi, const BasicLayout<T>& bj, const SolverConfig& cfg) {
  const auto& th = cfg.thresholds;
  const double iou_cap = th.iou - cfg.iou_slack;
  auto iou_term = [&] { return hinge(aabb_iou(bi, bj) - iou_cap); };
  switch (rule) {
    case Rule::LeftOf: return hinge(bi.cx - bj.cx + cfg.separation_slack) + iou_term();
    case Rule::RightOf: return hinge(bj.cx - bi.cx + cfg.separation_slack) + iou_term();
    case Rule::FrontOf: return hinge(bi.cy - bj.cy + cfg.separation_slack) + iou_term();
    case Rule::BehindOf: return hinge(bj.cy - bi.cy + cfg.separation_slack) + iou_term();
    case Rule::BiggerThan: {
      const T ratio = 1.0 - box_volume(bj) / box_volume(bi);
      return hinge((th.volume_ratio + cfg.ratio_slack) - ratio);
    }
    case Rule::SmallerThan: {
      const T ratio = 1.0 - box_volume(bj) / box_volume(bi);
      return hinge(ratio + (th.volume_ratio + cfg.ratio_slack));
    }
    case Rule::TallerThan: {
      const T ratio = 1.0 - (bj.cz + bj.h) / (bi.cz + bi.h);
      return hinge((th.height_ratio + cfg.ratio_slack) - ratio);
    }
    case Rule::ShorterThan: {
      const T ratio = 1.0 - (bj.cz + bj.h) / (bi.cz + bi.h);
      return hinge(ratio + (th.height_ratio + cfg.ratio_slack));
    }
    case Rule::CloseBy: {
      const T d = corner_set_distance(corners(bi), corners(bj), th.close_mode);
      return hinge(d - (th.close_distance - cfg.distance_slack));
    }
    case Rule::SymmetricalTo: {
      const auto cj = corners(bj);
      const T dx = corner_set_distance(corners(flip(bi, FlipAxis::X)), cj, th.symmetry_mode);
      const T dy = corner_set_distance(corners(flip(bi, FlipAxis::Y)), cj, th.symmetry_mode);
      const T d = dx < dy ? dx : dy;
      return hinge(d - (th.symmetry_distance - cfg.distance_slack));
    }
    case Rule::None: break;
  }
  return T(0.0);
}

template <typename T>
T penetration(const T& center_gap, const T& half_sum) {
  const T gap = center_gap < T(0.0) ? -center_gap : center_gap;
  return hinge(half_sum - gap);
}

/// Product of per-axis penetration depths. Nonzero exactly where the padded
/// footprints intersect, but unlike the intersection volume its slope in the
/// centers does not vanish when one extent contains the other.
template <typename T>
T overlap_penalty(const BasicLayout<T>& a, const BasicLayout<T>& b, double margin) {
  const T px = penetration(a.cx - b.cx, (a.w + b.w) * 0.5 + 2 * margin);
  const T py = penetration(a.cy - b.cy, (a.l + b.l) * 0.5 + 2 * margin);
  const T pz = penetration((a.cz + a.h * 0.5) - (b.cz + b.h * 0.5), (a.h + b.h) * 0.5);
  return px * py * pz;
}

template <typename T>
T bounds_penalty(const BasicLayout<T>& b, const RoomBounds& room) {
  T acc(0.0);
  const double hx = room.width / 2;
  const double hy = room.length / 2;
  for (const auto& p : corners(b)) {
    const T ex = hinge(p.x - hx) + hinge(-hx - p.x);
    const T ey = hinge(p.y - hy) + hinge(-hy - p.y);
    acc = acc + ex * ex + ey * ey;
  }
  const T ez = hinge(b.cz + b.h - room.height) + hinge(-b.cz);
  return acc + ez * ez;
}

template <typename T>
T size_prior(const BasicLayout<T>& b, const Extents& e) {
  const T dw = (b.w - e[0]) / e[0];
  const T dl = (b.l - e[1]) / e[1];
  const T dh = (b.h - e[2]) / e[2];
  return dw * dw + dl * dl + dh * dh;
}

template <std::size_t N>
BasicLayout<Dual<N>> dual_box(const Layout7DoF& b, std::size_t offset, bool seed_sizes, bool seed_centers) {
  auto var = [](double v, bool seed, std::size_t idx) { return seed ? Dual<N>::variable(v, idx) : Dual<N>(v); };
  return {var(b.w, seed_sizes, offset + 0),  var(b.l, seed_sizes, offset + 1),  var(b.h, seed_sizes, offset + 2),
          var(b.cx, seed_centers, offset + 3), var(b.cy, seed_centers, offset + 4), Dual<N>(b.cz), b.angle_bin};
}

}  // namespace detail

/// Penalty objective for synthesizing a layout directly from a scene graph:
/// rule hinges, pairwise overlap volume, room bounds and a weak pull toward
/// category default sizes. Heights are free; boxes stay on the floor.
class GraphLayoutObjective {
 public:
  GraphLayoutObjective(const SceneGraph& g, const SolverConfig& cfg, const CategorySizes& sizes)
      : graph_(g), cfg_(cfg) {
    for (std::size_t i = 0; i < g.node_count(); ++i) defaults_.push_back(sizes.at(g.category_name(static_cast<int>(i))));
    for (const auto& e : g.edges()) {
      const Rule r = g.vocab().relation(e.predicate).rule;
      if (r != Rule::None) ruled_.push_back({static_cast<std::size_t>(e.subject), static_cast<std::size_t>(e.object), r});
    }
  }

  const std::vector<Extents>& default_sizes() const noexcept { return defaults_; }

  double value(std::span<const Layout7DoF> b) const {
    double f = 0.0;
    for (const auto& e : ruled_) f += cfg_.rule_weight * detail::rule_penalty(e.rule, b[e.i], b[e.j], cfg_);
    if (cfg_.overlap_weight > 0)
      for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = i + 1; j < b.size(); ++j)
          f += cfg_.overlap_weight * detail::overlap_penalty(b[i], b[j], cfg_.overlap_margin);
    for (std::size_t i = 0; i < b.size(); ++i) {
      f += cfg_.bounds_weight * detail::bounds_penalty(b[i], cfg_.bounds);
      f += cfg_.size_prior_weight * detail::size_prior(b[i], defaults_[i]);
    }
    return f;
  }

  /// Objective value and gradient (N x 6; the cz column stays 0).
  double value_and_gradient(std::span<const Layout7DoF> b, Matrix& grad) const {
    using D12 = Dual<12>;
    using D6 = Dual<6>;
    grad = Matrix(b.size(), 6);
    double f = 0.0;
    auto scatter = [&](const auto& term, std::size_t node, std::size_t offset, double weight) {
      for (std::size_t k = 0; k < 6; ++k) grad(node, k) += weight * term.d[offset + k];
    };
    for (const auto& e : ruled_) {
      const auto bi = detail::dual_box<12>(b[e.i], 0, true, true);
      const auto bj = detail::dual_box<12>(b[e.j], 6, true, true);
      const D12 t = detail::rule_penalty(e.rule, bi, bj, cfg_);
      f += cfg_.rule_weight * t.v;
      scatter(t, e.i, 0, cfg_.rule_weight);
      scatter(t, e.j, 6, cfg_.rule_weight);
    }
    if (cfg_.overlap_weight > 0) {
      for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = i + 1; j < b.size(); ++j) {
          // Overlap moves boxes apart; it does not shrink them.
          const auto bi = detail::dual_box<12>(b[i], 0, false, true);
          const auto bj = detail::dual_box<12>(b[j], 6, false, true);
          const D12 t = detail::overlap_penalty(bi, bj, cfg_.overlap_margin);
          f += cfg_.overlap_weight * t.v;
          scatter(t, i, 0, cfg_.overlap_weight);
          scatter(t, j, 6, cfg_.overlap_weight);
        }
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto bi = detail::dual_box<6>(b[i], 0, true, true);
      const D6 t = detail::bounds_penalty(bi, cfg_.bounds) * cfg_.bounds_weight +
                   detail::size_prior(bi, defaults_[i]) * cfg_.size_prior_weight;
      f += t.v;
      scatter(t, i, 0, 1.0);
    }
    return f;
  }

 private:
  struct RuledEdge {
    std::size_t i;
    std::size_t j;
    Rule rule;
  };

  const SceneGraph& graph_;
  const SolverConfig& cfg_;
  std::vector<Extents> defaults_;
  std::vector<RuledEdge> ruled_;
};

namespace detail {

/// Momentum descent with a bold-driver step: the step shrinks and velocity
/// resets whenever the objective rises, and recovers slowly on progress.
struct StepController {
  double base;
  double lr;
  double previous = std::numeric_limits<double>::infinity();

  explicit StepController(double step) : base(step), lr(step) {}

  /// Returns true if velocity should be cleared.
  bool observe(double f) {
    const bool rose = f > previous;
    if (rose)
      lr = std::max(lr * 0.7, base * 1e-4);
    else
      lr = std::min(lr * 1.02, base);
    previous = f;
    return rose;
  }
};

}  // namespace detail

/// Synthesizes a layout for `g` from seeded random placements.
inline SolveResult solve_from_graph(const SceneGraph& g, const SolverConfig& cfg,
                                    const CategorySizes& sizes = CategorySizes{}) {
  cfg.validate();
  const std::size_t n = g.node_count();
  GraphLayoutObjective objective(g, cfg, sizes);
  SolveResult result;

  double footprint = 0.0;
  for (const auto& e : objective.default_sizes()) footprint += e[0] * e[1];
  if (footprint > cfg.bounds.width * cfg.bounds.length) {
    result.bounds_infeasible = true;
    log::warn("room floor is smaller than the total default footprint; returning best effort");
  }

  auto rng = CounterRng::substream(cfg.seed, 0x501e);
  std::vector<Layout7DoF> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = objective.default_sizes()[i];
    x[i].w = e[0];
    x[i].l = e[1];
    x[i].h = e[2];
    x[i].cx = rng.uniform(-0.5, 0.5) * cfg.bounds.width * cfg.init_spread;
    x[i].cy = rng.uniform(-0.5, 0.5) * cfg.bounds.length * cfg.init_spread;
    x[i].cz = 0.0;
    x[i].angle_bin = 0;
  }

  Matrix velocity(n, 6);
  Matrix grad;
  detail::StepController step(cfg.step_size);
  std::vector<Layout7DoF> best = x;
  double best_f = std::numeric_limits<double>::infinity();
  std::size_t last_improvement = 0;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    if (it > 0 && cfg.rebin_interval > 0 && it % cfg.rebin_interval == 0) {
      for (std::size_t i = 0; i < n; ++i) {
        double f_bin = objective.value(x);
        const int keep = x[i].angle_bin;
        int chosen = keep;
        for (int bin = 0; bin < kRotationBins; ++bin) {
          if (bin == keep) continue;
          x[i].angle_bin = bin;
          const double f = objective.value(x);
          if (f < f_bin) {
            f_bin = f;
            chosen = bin;
          }
        }
        x[i].angle_bin = chosen;
      }
    }

    const double f = objective.value_and_gradient(x, grad);
    if (!std::isfinite(f)) throw NumericError("solver objective became non-finite");
    const auto coll = collision_matrix(x, cfg.collision_threshold);
    result.trace.push(f, coll.total_volume, rule_violations(g, x, cfg.thresholds));

    if (f < best_f - cfg.tolerance) last_improvement = it;
    if (f < best_f) {
      best_f = f;
      best = x;
    }
    if (f < cfg.tolerance || it - last_improvement >= cfg.patience) {
      result.converged = true;
      break;
    }

    if (step.observe(f)) std::fill(velocity.data().begin(), velocity.data().end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* p[6] = {&x[i].w, &x[i].l, &x[i].h, &x[i].cx, &x[i].cy, &x[i].cz};
      for (std::size_t k = 0; k < 5; ++k) {
        velocity(i, k) = cfg.momentum * velocity(i, k) - step.lr * grad(i, k);
        *p[k] += velocity(i, k);
      }
      x[i].w = std::max(x[i].w, cfg.min_extent);
      x[i].l = std::max(x[i].l, cfg.min_extent);
      x[i].h = std::max(x[i].h, cfg.min_extent);
    }
  }

  result.layouts = std::move(best);
  result.best_objective = best_f;
  result.feasible = rule_violations(g, result.layouts, cfg.thresholds) == 0 &&
                    !collision_matrix(result.layouts, cfg.collision_threshold).any();
  return result;
}

/// Refinement objective: mean L1 box error plus eta times the summed
/// (1 - IoU). Yaw bins are held fixed, so the rotation term is constant and
/// left out.
inline double refinement_objective(std::span<const Layout7DoF> x, std::span<const Layout7DoF> targets, double eta,
                                   Matrix* grad = nullptr) {
  const std::size_t n = x.size();
  const Matrix boxes = boxes_matrix(x);
  double f = 0.0;
  if (grad) *grad = Matrix(n, 6);
  const double inv_n = n ? 1.0 / static_cast<double>(n) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = box_params(targets[i]);
    for (std::size_t k = 0; k < 6; ++k) {
      const double diff = boxes(i, k) - t[k];
      f += std::abs(diff) * inv_n;
      if (grad) (*grad)(i, k) = diff > 0 ? inv_n : (diff < 0 ? -inv_n : 0.0);
    }
  }
  if (eta > 0) {
    const auto reg = iou_reg_loss(targets, boxes);
    f += eta * reg.value;
    if (grad)
      for (std::size_t i = 0; i < grad->data().size(); ++i) grad->data()[i] += eta * reg.grad_boxes.data()[i];
  }
  return f;
}

/// Momentum descent on the refinement objective from `initial` toward
/// `targets`. When a graph is given, the trace counts its rule violations.
inline SolveResult refine_layouts(std::span<const Layout7DoF> initial, std::span<const Layout7DoF> targets,
                                  const SolverConfig& cfg, const SceneGraph* graph = nullptr) {
  cfg.validate();
  if (initial.size() != targets.size()) throw ValidationError("refine needs one target per node");
  if (graph && graph->node_count() != initial.size()) throw ValidationError("layout count does not match graph");
  const std::size_t n = initial.size();
  std::vector<Layout7DoF> x(initial.begin(), initial.end());
  SolveResult result;
  Matrix velocity(n, 6);
  Matrix grad;
  detail::StepController step(cfg.step_size);
  std::vector<Layout7DoF> best = x;
  double best_f = std::numeric_limits<double>::infinity();
  std::size_t last_improvement = 0;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const double f = refinement_objective(x, targets, cfg.eta, &grad);
    if (!std::isfinite(f)) throw NumericError("refinement objective became non-finite");
    const auto coll = collision_matrix(x, cfg.collision_threshold);
    result.trace.push(f, coll.total_volume, graph ? rule_violations(*graph, x, cfg.thresholds) : 0);
    if (f < best_f - cfg.tolerance) last_improvement = it;
    if (f < best_f) {
      best_f = f;
      best = x;
    }
    if (f < cfg.tolerance || it - last_improvement >= cfg.patience) {
      result.converged = true;
      break;
    }
    if (step.observe(f)) std::fill(velocity.data().begin(), velocity.data().end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* p[6] = {&x[i].w, &x[i].l, &x[i].h, &x[i].cx, &x[i].cy, &x[i].cz};
      for (std::size_t k = 0; k < 6; ++k) {
        velocity(i, k) = cfg.momentum * velocity(i, k) - step.lr * grad(i, k);
        *p[k] += velocity(i, k);
      }
      x[i].w = std::max(x[i].w, cfg.min_extent);
      x[i].l = std::max(x[i].l, cfg.min_extent);
      x[i].h = std::max(x[i].h, cfg.min_extent);
    }
  }
  result.layouts = std::move(best);
  result.best_objective = best_f;
  result.feasible = graph ? rule_violations(*graph, result.layouts, cfg.thresholds) == 0 &&
                                !collision_matrix(result.layouts, cfg.collision_threshold).any()
                          : !collision_matrix(result.layouts, cfg.collision_threshold).any();
  return result;
}

}  // namespace p3d
