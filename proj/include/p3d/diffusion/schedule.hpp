#pragma once

#include <cmath>
#include <vector>

#include "p3d/core/error.hpp"

namespace p3d {

/// beta_t, delta_t = 1 - beta_t and the running product delta_bar_t.
/// Tables are stored 0-based; step t in [1, T] lives at index t - 1.
struct NoiseSchedule {
  std::vector<double> beta;
  std::vector<double> delta;
  std::vector<double> delta_bar;

  std::size_t steps() const noexcept { return beta.size(); }
  double beta_at(std::size_t t) const { return beta.at(t - 1); }
  double delta_at(std::size_t t) const { return delta.at(t - 1); }
  double delta_bar_at(std::size_t t) const { return delta_bar.at(t - 1); }
  /// delta_bar_0 = 1 by convention.
  double delta_bar_prev(std::size_t t) const { return t <= 1 ? 1.0 : delta_bar.at(t - 2); }

  void check_step(std::size_t t) const {
    if (t < 1 || t > steps()) throw ValidationError("diffusion step " + std::to_string(t) + " outside [1, T]");
  }
};

/// Schedule from explicit betas. Zero betas are accepted (degenerate
/// test schedules), values must lie in [0, 1).
inline NoiseSchedule schedule_from_betas(std::vector<double> betas) {
  if (betas.empty()) throw ValidationError("schedule needs at least one step");
  NoiseSchedule s;
  s.beta = std::move(betas);
  s.delta.resize(s.beta.size());
  s.delta_bar.resize(s.beta.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < s.beta.size(); ++i) {
    if (!(s.beta[i] >= 0.0 && s.beta[i] < 1.0)) throw ValidationError("beta must lie in [0, 1)");
    s.delta[i] = 1.0 - s.beta[i];
    prod *= s.delta[i];
    s.delta_bar[i] = prod;
  }
  return s;
}

inline constexpr std::size_t kDefaultDiffusionSteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 2e-2;

/// Linear beta ramp from beta_start (t = 1) to beta_end (t = T).
inline NoiseSchedule build_schedule(std::size_t steps = kDefaultDiffusionSteps, double beta_start = kDefaultBetaStart,
                                    double beta_end = kDefaultBetaEnd) {
  if (steps < 1) throw ValidationError("T must be at least 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw ValidationError("require 0 < beta_start <= beta_end < 1");
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[i] = beta_start + (beta_end - beta_start) * frac;
  }
  return schedule_from_betas(std::move(betas));
}

}  // namespace p3d
