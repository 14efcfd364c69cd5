#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "p3d/core/error.hpp"
#include "p3d/diffusion/latent.hpp"
#include "p3d/diffusion/schedule.hpp"
#include "p3d/losses/losses.hpp"
#include "p3d/metrics/metrics.hpp"
#include "p3d/nn/weights.hpp"
#include "p3d/optim/solver.hpp"
#include "p3d/sdf/tsdf.hpp"

namespace p3d {

inline constexpr const char* kVersion = "0.3.0";

struct DiffusionConfig {
  std::size_t steps = kDefaultDiffusionSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;
  std::size_t latent_side = kLatentSide;
  std::size_t sdf_resolution = kSdfResolution;
  std::size_t denoiser_rank = 8;
  double denoiser_scale = 0.0;
};

struct EngineConfig {
  ModelConfig model;
  LossWeights loss;
  SolverConfig solver;
  DiffusionConfig diffusion;
  std::uint64_t seed = 0;
  std::uint64_t weight_seed = 0;  // seeded-init fallback when no weights file is given
  int port = 8080;
  std::size_t points = kDefaultCloudPoints;
  std::string weights;
  std::string embeddings;
  std::string category_sizes;
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError("wrong type", path + "/" + key);
  }
}

inline void require_object(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError("expected object", path.empty() ? "/" : path);
}

}  // namespace detail

/// Overlays solver fields present in `j`; absent fields keep their value.
inline void apply_solver_json(SolverConfig& s, const nlohmann::json& j, const std::string& path = "/solver_config") {
  if (j.is_null()) return;
  detail::require_object(j, path);
  using detail::read_field;
  read_field(j, "max_iters", s.max_iters, path);
  read_field(j, "step_size", s.step_size, path);
  read_field(j, "momentum", s.momentum, path);
  read_field(j, "eta", s.eta, path);
  read_field(j, "overlap_weight", s.overlap_weight, path);
  read_field(j, "rule_weight", s.rule_weight, path);
  read_field(j, "seed", s.seed, path);
  read_field(j, "tolerance", s.tolerance, path);
  read_field(j, "rebin_interval", s.rebin_interval, path);
  read_field(j, "patience", s.patience, path);
  if (auto it = j.find("bounds"); it != j.end()) {
    if (!it->is_array() || it->size() != 3) throw SchemaError("expected [width, length, height]", path + "/bounds");
    try {
      s.bounds = {(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
    } catch (const nlohmann::json::exception&) {
      throw SchemaError("expected numbers", path + "/bounds");
    }
  }
}

inline nlohmann::json solver_to_json(const SolverConfig& s) {
  return {{"max_iters", s.max_iters}, {"step_size", s.step_size}, {"momentum", s.momentum},
          {"eta", s.eta},             {"overlap_weight", s.overlap_weight}, {"rule_weight", s.rule_weight},
          {"seed", s.seed},           {"tolerance", s.tolerance},
          {"bounds", {s.bounds.width, s.bounds.length, s.bounds.height}}};
}

/// Config-file layer. Keys mirror the flag names.
inline void apply_config_json(EngineConfig& c, const nlohmann::json& j) {
  detail::require_object(j, "");
  using detail::read_field;
  read_field(j, "seed", c.seed, "");
  read_field(j, "weight_seed", c.weight_seed, "");
  read_field(j, "port", c.port, "");
  read_field(j, "points", c.points, "");
  read_field(j, "weights", c.weights, "");
  read_field(j, "embeddings", c.embeddings, "");
  read_field(j, "category_sizes", c.category_sizes, "");
  if (auto it = j.find("solver"); it != j.end()) apply_solver_json(c.solver, *it, "/solver");
  if (auto it = j.find("model"); it != j.end()) {
    detail::require_object(*it, "/model");
    read_field(*it, "hidden", c.model.hidden, "/model");
    read_field(*it, "gcn_layers", c.model.gcn_layers, "/model");
  }
  if (auto it = j.find("loss"); it != j.end()) {
    detail::require_object(*it, "/loss");
    read_field(*it, "lambda_kl", c.loss.lambda_kl, "/loss");
    read_field(*it, "lambda_layout", c.loss.lambda_layout, "/loss");
    read_field(*it, "lambda_shape", c.loss.lambda_shape, "/loss");
    read_field(*it, "eta", c.loss.eta, "/loss");
  }
}

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

/// Environment layer (prefix P3D_).
inline void apply_env(EngineConfig& c, const EnvLookup& env = process_env) {
  auto number = [](const std::string& name, const std::string& text) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || v < 0) throw ValidationError("expected a nonnegative integer", name);
    return static_cast<std::uint64_t>(v);
  };
  if (auto v = env("P3D_PORT")) c.port = static_cast<int>(number("P3D_PORT", *v));
  if (auto v = env("P3D_WEIGHTS")) c.weights = *v;
  if (auto v = env("P3D_EMBEDDINGS")) c.embeddings = *v;
  if (auto v = env("P3D_SEED")) c.seed = number("P3D_SEED", *v);
}

}  // namespace p3d
