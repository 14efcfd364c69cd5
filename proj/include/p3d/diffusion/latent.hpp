#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "p3d/core/error.hpp"
#include "p3d/core/rng.hpp"
#include "p3d/diffusion/schedule.hpp"

namespace p3d {

inline constexpr std::size_t kLatentSide = 16;
inline constexpr std::size_t kLatentCells = kLatentSide * kLatentSide * kLatentSide;

/// Single-channel 16^3 shape latent, x-fastest.
struct ShapeLatent {
  std::vector<double> cells = std::vector<double>(kLatentCells, 0.0);

  static ShapeLatent gaussian(CounterRng& rng) {
    ShapeLatent s;
    for (double& v : s.cells) v = rng.normal();
    return s;
  }

  std::size_t size() const noexcept { return cells.size(); }
  friend bool operator==(const ShapeLatent&, const ShapeLatent&) = default;
};

inline void require_same_shape(const ShapeLatent& a, const ShapeLatent& b) {
  if (a.size() != b.size()) throw ValidationError("latent shape mismatch");
}

/// s_t = sqrt(delta_bar_t) s0 + sqrt(1 - delta_bar_t) eps.
inline ShapeLatent forward_noise(const ShapeLatent& s0, std::size_t t, const ShapeLatent& eps,
                                 const NoiseSchedule& sched) {
  sched.check_step(t);
  require_same_shape(s0, eps);
  const double a = std::sqrt(sched.delta_bar_at(t));
  const double b = std::sqrt(1.0 - sched.delta_bar_at(t));
  ShapeLatent out;
  out.cells.resize(s0.size());
  for (std::size_t i = 0; i < s0.size(); ++i) out.cells[i] = a * s0.cells[i] + b * eps.cells[i];
  return out;
}

inline constexpr double kSingularDeltaBar = 1e-12;

/// One-jump recovery s0' = (s_t - sqrt(1 - delta_bar_t) eps_hat) / sqrt(delta_bar_t).
inline ShapeLatent predict_s0(const ShapeLatent& s_t, std::size_t t, const ShapeLatent& eps_hat,
                              const NoiseSchedule& sched) {
  sched.check_step(t);
  require_same_shape(s_t, eps_hat);
  const double db = sched.delta_bar_at(t);
  if (db <= kSingularDeltaBar) throw NumericError("delta_bar_t too small for latent recovery");
  const double inv = 1.0 / std::sqrt(db);
  const double b = std::sqrt(1.0 - db);
  ShapeLatent out;
  out.cells.resize(s_t.size());
  for (std::size_t i = 0; i < s_t.size(); ++i) out.cells[i] = (s_t.cells[i] - b * eps_hat.cells[i]) * inv;
  return out;
}

/// Squared-error denoiser objective, summed over the grid.
inline double diffusion_loss(const ShapeLatent& eps, const ShapeLatent& eps_hat) {
  require_same_shape(eps, eps_hat);
  double acc = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = eps.cells[i] - eps_hat.cells[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace p3d
