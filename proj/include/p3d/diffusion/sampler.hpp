#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "p3d/core/rng.hpp"
#include "p3d/diffusion/latent.hpp"
#include "p3d/diffusion/schedule.hpp"

namespace p3d {

/// Conditional noise predictor eps_theta(s_t, t, c).
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual ShapeLatent predict_eps(const ShapeLatent& s_t, std::size_t t, std::span<const double> code) const = 0;
};

class ZeroDenoiser final : public Denoiser {
 public:
  ShapeLatent predict_eps(const ShapeLatent& s_t, std::size_t, std::span<const double>) const override {
    ShapeLatent out;
    out.cells.assign(s_t.size(), 0.0);
    return out;
  }
};

/// Test scaffold: eps = scale * s_t + U (V c), a rank-r bias projection of
/// the shape code. Not a trained model.
class LinearDenoiser final : public Denoiser {
 public:
  LinearDenoiser(double scale, std::size_t code_dim, std::size_t rank, std::uint64_t seed)
      : scale_(scale), code_dim_(code_dim), rank_(rank), u_(kLatentCells * rank), v_(rank * code_dim) {
    auto rng = CounterRng::substream(seed, 0xde7015e);
    const double su = 1.0 / std::sqrt(static_cast<double>(rank));
    const double sv = 1.0 / std::sqrt(static_cast<double>(code_dim));
    for (double& x : u_) x = rng.normal(0.0, su);
    for (double& x : v_) x = rng.normal(0.0, sv);
  }

  ShapeLatent predict_eps(const ShapeLatent& s_t, std::size_t, std::span<const double> code) const override {
    if (code.size() != code_dim_) throw ValidationError("shape code width does not match denoiser");
    std::vector<double> proj(rank_, 0.0);
    for (std::size_t r = 0; r < rank_; ++r)
      for (std::size_t c = 0; c < code_dim_; ++c) proj[r] += v_[r * code_dim_ + c] * code[c];
    ShapeLatent out;
    out.cells.resize(s_t.size());
    for (std::size_t i = 0; i < s_t.size(); ++i) {
      double bias = 0.0;
      for (std::size_t r = 0; r < rank_; ++r) bias += u_[i * rank_ + r] * proj[r];
      out.cells[i] = scale_ * s_t.cells[i] + bias;
    }
    return out;
  }

 private:
  double scale_;
  std::size_t code_dim_;
  std::size_t rank_;
  std::vector<double> u_;
  std::vector<double> v_;
};

inline CounterRng sampler_stream(std::uint64_t seed) { return CounterRng::substream(seed, 0x5a3b1e); }

/// s_T as drawn by ancestral_sample for this seed.
inline ShapeLatent initial_latent(std::uint64_t seed) {
  auto rng = sampler_stream(seed);
  return ShapeLatent::gaussian(rng);
}

/// Ancestral DDPM sampling from s_T ~ N(0, I). Each step forms the
/// posterior mean from the eps prediction,
///   mean = (s_t - beta_t / sqrt(1 - delta_bar_t) * eps_hat) / sqrt(delta_t),
/// then adds sqrt(beta_tilde_t) noise with
///   beta_tilde_t = beta_t (1 - delta_bar_{t-1}) / (1 - delta_bar_t);
/// the final step (t = 1) adds none.
inline ShapeLatent ancestral_sample(const Denoiser& den, std::span<const double> code, const NoiseSchedule& sched,
                                    std::uint64_t seed) {
  auto rng = sampler_stream(seed);
  ShapeLatent s = ShapeLatent::gaussian(rng);
  for (std::size_t t = sched.steps(); t >= 1; --t) {
    const ShapeLatent eps = den.predict_eps(s, t, code);
    require_same_shape(s, eps);
    for (double v : eps.cells)
      if (!std::isfinite(v)) throw NumericError("denoiser returned non-finite values at step " + std::to_string(t));
    const double beta = sched.beta_at(t);
    const double one_minus_db = 1.0 - sched.delta_bar_at(t);
    const double eps_coef = one_minus_db > 0.0 ? beta / std::sqrt(one_minus_db) : 0.0;
    const double inv_sqrt_delta = 1.0 / std::sqrt(sched.delta_at(t));
    for (std::size_t i = 0; i < s.size(); ++i) s.cells[i] = (s.cells[i] - eps_coef * eps.cells[i]) * inv_sqrt_delta;
    if (t > 1) {
      const double var = one_minus_db > 0.0 ? beta * (1.0 - sched.delta_bar_prev(t)) / one_minus_db : 0.0;
      const double sd = std::sqrt(var);
      for (double& v : s.cells) v += sd * rng.normal();
    }
  }
  return s;
}

}  // namespace p3d
