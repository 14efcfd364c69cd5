#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "p3d/core/error.hpp"
#include "p3d/core/matrix.hpp"
#include "p3d/core/rng.hpp"
#include "p3d/io/tensor_file.hpp"

namespace p3d {

/// Layer widths of the whole network stack. Only `hidden` and the GCN
/// output widths are free choices; the rest follow the published setup.
struct ModelConfig {
  std::size_t q = 64;
  std::size_t clip_dim = 512;
  std::size_t llm_dim = 768;
  std::size_t hidden = 512;
  std::size_t gcn_layers = 5;
  std::size_t mu_box = 48;
  std::size_t mu_angle = 16;
  std::size_t rotation_bins = 24;
  std::size_t shape_code = 1280;
  std::size_t object_vocab = 35;
  std::size_t relation_vocab = 15;

  std::size_t node_input() const { return 2 * q + clip_dim + llm_dim; }
  std::size_t edge_input() const { return 2 * q + clip_dim + llm_dim; }
  std::size_t latent() const { return mu_box + mu_angle; }

  std::vector<float> as_meta() const {
    return {float(q),   float(clip_dim),      float(llm_dim),    float(hidden),       float(gcn_layers),
            float(mu_box), float(mu_angle), float(rotation_bins), float(shape_code), float(object_vocab),
            float(relation_vocab)};
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline constexpr const char* kConfigTensor = "config/dims";

/// Read-only view of one dense layer stored as f32 tensors `<name>/weight`
/// (out x in) and `<name>/bias` (out).
struct LinearView {
  std::span<const float> weight;
  std::span<const float> bias;
  std::size_t in = 0;
  std::size_t out = 0;

  /// y = W x + b, accumulated in double in a fixed order.
  void apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r < out; ++r) {
      const float* w = weight.data() + r * in;
      double acc = bias[r];
      for (std::size_t c = 0; c < in; ++c) acc += static_cast<double>(w[c]) * x[c];
      y[r] = acc;
    }
  }
};

/// Named tensor store for every trainable parameter. Immutable after
/// construction.
class ModelWeights {
 public:
  ModelWeights(ModelConfig cfg, TensorMap tensors) : cfg_(cfg), tensors_(std::move(tensors)) {
    verify();
  }

  /// Seeded initialization: layers N(0, 0.02) with zero bias, category
  /// tables N(0, 1/Q).
  static ModelWeights seeded(const ModelConfig& cfg, std::uint64_t seed) {
    const double table_std = 1.0 / std::sqrt(static_cast<double>(cfg.q));
    return ModelWeights(cfg, build(cfg, [seed, table_std](const std::string& name, std::size_t stream_id, Tensor& t) {
      const bool is_table = name == "embed/object" || name == "embed/relation";
      const bool is_bias = name.size() >= 5 && name.compare(name.size() - 5, 5, "/bias") == 0;
      if (is_bias) return;
      auto rng = CounterRng::substream(seed, stream_id);
      const double stddev = is_table ? table_std : 0.02;
      for (float& v : t.values) v = static_cast<float>(rng.normal(0.0, stddev));
    }));
  }

  /// Every tensor filled with `value` (zero-weight test configurations).
  static ModelWeights constant(const ModelConfig& cfg, float value) {
    return ModelWeights(cfg, build(cfg, [value](const std::string&, std::size_t, Tensor& t) {
      std::fill(t.values.begin(), t.values.end(), value);
    }));
  }

  /// Loads a P3DW file; `expected` must match the stored config tensor.
  static ModelWeights from_tensors(TensorMap tensors, const ModelConfig& expected) {
    auto it = tensors.find(kConfigTensor);
    if (it == tensors.end()) throw ValidationError("weights file lacks 'config/dims'");
    if (it->second.values != expected.as_meta())
      throw ValidationError("weights file dimensions do not match the configured model");
    return ModelWeights(expected, std::move(tensors));
  }

  const ModelConfig& config() const noexcept { return cfg_; }
  const TensorMap& tensors() const noexcept { return tensors_; }

  const Tensor& tensor(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ValidationError("missing weight tensor '" + name + "'");
    return it->second;
  }

  LinearView linear(const std::string& name) const {
    const Tensor& w = tensor(name + "/weight");
    const Tensor& b = tensor(name + "/bias");
    return {w.values, b.values, w.dims.at(1), w.dims.at(0)};
  }

  Matrix matrix(const std::string& name) const {
    const Tensor& t = tensor(name);
    return Matrix(t.dims.at(0), t.dims.at(1), std::vector<double>(t.values.begin(), t.values.end()));
  }

  /// Tensor names whose prefix is `prefix/`.
  std::vector<std::string> names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, t] : tensors_)
      if (name.rfind(prefix + "/", 0) == 0) out.push_back(name);
    return out;
  }

 private:
  struct Shape {
    std::string name;
    std::vector<std::uint32_t> dims;
  };

  static void add_linear(std::vector<Shape>& s, const std::string& name, std::size_t in, std::size_t out) {
    s.push_back({name + "/weight", {std::uint32_t(out), std::uint32_t(in)}});
    s.push_back({name + "/bias", {std::uint32_t(out)}});
  }

  static void add_gcn(std::vector<Shape>& s, const std::string& prefix, const ModelConfig& c) {
    std::size_t node_in = c.node_input();
    std::size_t edge_in = c.edge_input();
    for (std::size_t k = 0; k < c.gcn_layers; ++k) {
      const std::string layer = prefix + "/gcn" + std::to_string(k);
      add_linear(s, layer + "/triplet", 2 * node_in + edge_in, 3 * c.hidden);
      add_linear(s, layer + "/self", node_in, c.hidden);
      node_in = edge_in = c.hidden;
    }
  }

  static std::vector<Shape> layout(const ModelConfig& c) {
    std::vector<Shape> s;
    s.push_back({"embed/object", {std::uint32_t(c.object_vocab), std::uint32_t(c.q)}});
    s.push_back({"embed/relation", {std::uint32_t(c.relation_vocab), std::uint32_t(2 * c.q)}});
    s.push_back({"embed/layout", {std::uint32_t(c.q), 7}});
    add_gcn(s, "phi", c);
    add_linear(s, "phi/box/trunk", c.hidden, c.hidden);
    add_linear(s, "phi/box/mu", c.hidden, c.mu_box);
    add_linear(s, "phi/box/logvar", c.hidden, c.mu_box);
    add_linear(s, "phi/angle/trunk", c.hidden, c.hidden);
    add_linear(s, "phi/angle/mu", c.hidden, c.mu_angle);
    add_linear(s, "phi/angle/logvar", c.hidden, c.mu_angle);
    add_gcn(s, "encoder", c);
    for (const char* group : {"decoder/box", "decoder/angle", "shape"}) {
      const std::size_t out = std::string(group) == "decoder/box" ? 6
                              : std::string(group) == "decoder/angle" ? c.rotation_bins
                                                                       : c.shape_code;
      add_linear(s, std::string(group) + "/fc0", c.hidden, c.hidden);
      add_linear(s, std::string(group) + "/fc1", c.hidden, c.hidden);
      add_linear(s, std::string(group) + "/fc2", c.hidden, out);
    }
    return s;
  }

  template <typename Fill>
  static TensorMap build(const ModelConfig& c, Fill&& fill) {
    TensorMap out;
    std::size_t stream = 1;
    for (auto& shape : layout(c)) {
      Tensor t;
      t.dims = shape.dims;
      t.values.assign(t.numel(), 0.0f);
      fill(shape.name, stream++, t);
      out.emplace(shape.name, std::move(t));
    }
    const auto meta = c.as_meta();
    out.emplace(kConfigTensor, Tensor{{std::uint32_t(meta.size())}, meta});
    return out;
  }

  void verify() const {
    for (const auto& shape : layout(cfg_)) {
      const Tensor& t = tensor(shape.name);
      if (t.dims != shape.dims) throw ValidationError("weight tensor '" + shape.name + "' has unexpected shape");
      for (float v : t.values)
        if (!std::isfinite(v)) throw ValidationError("weight tensor '" + shape.name + "' has non-finite entries");
    }
  }

  ModelConfig cfg_;
  TensorMap tensors_;
};

}  // namespace p3d
