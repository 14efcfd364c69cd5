#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "p3d/core/error.hpp"
#include "p3d/core/matrix.hpp"
#include "p3d/core/rng.hpp"
#include "p3d/geometry/layout.hpp"
#include "p3d/graph/scene_graph.hpp"
#include "p3d/nn/weights.hpp"
#include "p3d/prior/embeddings.hpp"
#include "p3d/prior/graph_features.hpp"

namespace p3d {

struct EdgeIndex {
  int subject = 0;
  int object = 0;
};

inline std::vector<EdgeIndex> topology(const SceneGraph& g) {
  std::vector<EdgeIndex> out;
  out.reserve(g.edge_count());
  for (const auto& e : g.edges()) out.push_back({e.subject, e.object});
  return out;
}

/// Triplet map (2*node_in + edge_in -> 2*node_out + edge_out) and node self
/// map (node_in -> node_out) of one message-passing layer.
struct GcnLayerView {
  LinearView triplet;
  LinearView self;

  std::size_t node_out() const { return self.out; }
  std::size_t edge_out() const { return triplet.out - 2 * self.out; }
};

namespace detail {
inline void relu(std::span<double> v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

inline void check_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw NumericError(std::string("non-finite activation in ") + what);
}
}  // namespace detail

/// One triplet message-passing layer. For each edge i -> j the vector
/// [node_i | edge | node_j] goes through the triplet map and a ReLU, then
/// splits into (subject message, new edge, object message). A node's output
/// is the mean of its ReLU self-map and the mean of its messages; isolated
/// nodes keep the self-map alone.
inline std::pair<Matrix, Matrix> gcn_layer_forward(const Matrix& nodes, const Matrix& edges,
                                                   std::span<const EdgeIndex> topo, const GcnLayerView& layer) {
  const std::size_t n = nodes.rows();
  const std::size_t node_in = nodes.cols();
  const std::size_t node_out = layer.node_out();
  const std::size_t edge_out = layer.edge_out();
  if (edges.rows() != topo.size()) throw ValidationError("edge feature rows != edge count");
  if (layer.self.in != node_in) throw ValidationError("node feature width does not match layer");
  if (!topo.empty() && layer.triplet.in != 2 * node_in + edges.cols())
    throw ValidationError("edge feature width does not match layer");

  Matrix new_nodes(n, node_out);
  for (std::size_t i = 0; i < n; ++i) {
    layer.self.apply(nodes.row(i), new_nodes.row(i));
    detail::relu(new_nodes.row(i));
  }

  Matrix new_edges(topo.size(), edge_out);
  Matrix message_sum(n, node_out);
  std::vector<std::size_t> message_count(n, 0);
  std::vector<double> input(layer.triplet.in);
  std::vector<double> output(layer.triplet.out);
  for (std::size_t e = 0; e < topo.size(); ++e) {
    const auto s = static_cast<std::size_t>(topo[e].subject);
    const auto o = static_cast<std::size_t>(topo[e].object);
    if (s >= n || o >= n) throw ValidationError("edge endpoint outside node range");
    auto it = std::copy(nodes.row(s).begin(), nodes.row(s).end(), input.begin());
    it = std::copy(edges.row(e).begin(), edges.row(e).end(), it);
    std::copy(nodes.row(o).begin(), nodes.row(o).end(), it);
    layer.triplet.apply(input, output);
    detail::relu(output);
    for (std::size_t k = 0; k < node_out; ++k) {
      message_sum(s, k) += output[k];
      message_sum(o, k) += output[node_out + edge_out + k];
    }
    std::copy_n(output.begin() + static_cast<std::ptrdiff_t>(node_out), edge_out, new_edges.row(e).begin());
    ++message_count[s];
    ++message_count[o];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (message_count[i] == 0) continue;
    const double inv = 1.0 / static_cast<double>(message_count[i]);
    for (std::size_t k = 0; k < node_out; ++k) new_nodes(i, k) = 0.5 * (new_nodes(i, k) + message_sum(i, k) * inv);
  }
  return {std::move(new_nodes), std::move(new_edges)};
}

inline GcnLayerView gcn_layer(const ModelWeights& w, const std::string& prefix, std::size_t k) {
  const std::string layer = prefix + "/gcn" + std::to_string(k);
  return {w.linear(layer + "/triplet"), w.linear(layer + "/self")};
}

inline GraphFeatureSet gcn_stack(const GraphFeatureSet& in, std::span<const EdgeIndex> topo, const ModelWeights& w,
                                 const std::string& prefix) {
  GraphFeatureSet cur = in;
  for (std::size_t k = 0; k < w.config().gcn_layers; ++k) {
    auto [nodes, edges] = gcn_layer_forward(cur.node_features, cur.edge_features, topo, gcn_layer(w, prefix, k));
    cur.node_features = std::move(nodes);
    cur.edge_features = std::move(edges);
  }
  detail::check_finite(cur.node_features, prefix.c_str());
  detail::check_finite(cur.edge_features, prefix.c_str());
  return cur;
}

/// Applies a chain of dense layers with ReLU between them (none after the last).
inline Matrix mlp_forward(const Matrix& x, std::span<const LinearView> layers) {
  Matrix cur = x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& layer = layers[k];
    if (layer.in != cur.cols()) throw ValidationError("MLP input width mismatch");
    Matrix next(cur.rows(), layer.out);
    for (std::size_t r = 0; r < cur.rows(); ++r) {
      layer.apply(cur.row(r), next.row(r));
      if (k + 1 < layers.size()) detail::relu(next.row(r));
    }
    cur = std::move(next);
  }
  return cur;
}

inline constexpr double kLogVarClamp = 10.0;

/// Per-node Gaussian over the 64-d latent; mu = mu_box | mu_angle.
struct LatentDistribution {
  Matrix mu;
  Matrix sigma;
};

/// Distribution model: GCN stack, then two parallel trunks each feeding a
/// (mean, log-variance) head pair.
inline LatentDistribution phi_forward(const GraphFeatureSet& g_dagger, std::span<const EdgeIndex> topo,
                                      const ModelWeights& w) {
  if (g_dagger.provenance != Provenance::TrainingGDagger)
    throw ValidationError("distribution model expects the training-time representation");
  const auto feats = gcn_stack(g_dagger, topo, w, "phi");
  const std::size_t n = feats.node_features.rows();
  const auto& cfg = w.config();
  LatentDistribution out{Matrix(n, cfg.latent()), Matrix(n, cfg.latent())};
  std::size_t offset = 0;
  for (const char* branch : {"phi/box", "phi/angle"}) {
    const std::string b(branch);
    const LinearView trunk[] = {w.linear(b + "/trunk")};
    Matrix hidden = mlp_forward(feats.node_features, trunk);
    for (std::size_t r = 0; r < n; ++r) detail::relu(hidden.row(r));
    const LinearView mu_head[] = {w.linear(b + "/mu")};
    const LinearView lv_head[] = {w.linear(b + "/logvar")};
    const Matrix mu = mlp_forward(hidden, mu_head);
    const Matrix logvar = mlp_forward(hidden, lv_head);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < mu.cols(); ++k) {
        out.mu(r, offset + k) = mu(r, k);
        const double lv = std::clamp(logvar(r, k), -kLogVarClamp, kLogVarClamp);
        out.sigma(r, offset + k) = std::exp(0.5 * lv);
      }
    }
    offset += mu.cols();
  }
  detail::check_finite(out.mu, "phi heads");
  detail::check_finite(out.sigma, "phi heads");
  return out;
}

/// z = mu + sigma * eps, eps ~ N(0, I) from the seeded stream.
inline Matrix reparameterize(const LatentDistribution& d, std::uint64_t seed) {
  Matrix z(d.mu.rows(), d.mu.cols());
  auto rng = CounterRng::substream(seed, 0x2e9a);
  for (std::size_t i = 0; i < z.data().size(); ++i) {
    const double sigma = d.sigma.data()[i];
    if (!(sigma > 0)) throw ValidationError("sigma must be strictly positive");
    z.data()[i] = d.mu.data()[i] + sigma * rng.normal();
  }
  return z;
}

/// Inference-time latent: z ~ N(0, I) per node.
inline Matrix sample_prior_latent(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Matrix z(n, dim);
  auto rng = CounterRng::substream(seed, 0x2e9a);
  for (double& v : z.data()) v = rng.normal();
  return z;
}

/// Unified graph encoder. Accepts the inference representation, or the
/// training one when `allow_training` is set (z substituted upstream).
inline GraphFeatureSet encode_graph(const GraphFeatureSet& g_ddagger, std::span<const EdgeIndex> topo,
                                    const ModelWeights& w, bool allow_training = false) {
  if (g_ddagger.provenance != Provenance::InferenceGDdagger && !allow_training)
    throw ValidationError("graph encoder expects the inference-time representation");
  return gcn_stack(g_ddagger, topo, w, "encoder");
}

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// Index of the largest logit; ties resolve to the lowest bin.
inline int argmax_bin(std::span<const double> logits) {
  int best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k)
    if (logits[k] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  return best;
}

struct LayoutPrediction {
  Matrix boxes;       // N x 6: w, l, h, cx, cy, cz
  Matrix rot_logits;  // N x 24

  std::vector<Layout7DoF> layouts() const {
    std::vector<Layout7DoF> out(boxes.rows());
    for (std::size_t i = 0; i < boxes.rows(); ++i) {
      auto b = boxes.row(i);
      out[i] = {b[0], b[1], b[2], b[3], b[4], b[5], argmax_bin(rot_logits.row(i))};
    }
    return out;
  }
};

inline std::vector<LinearView> mlp_group(const ModelWeights& w, const std::string& prefix) {
  return {w.linear(prefix + "/fc0"), w.linear(prefix + "/fc1"), w.linear(prefix + "/fc2")};
}

/// Layout decoder: two 3-layer MLP groups per node. Sizes go through a
/// softplus so extents are positive.
inline LayoutPrediction decode_layout(const GraphFeatureSet& features, const ModelWeights& w) {
  LayoutPrediction out;
  out.boxes = mlp_forward(features.node_features, mlp_group(w, "decoder/box"));
  for (std::size_t i = 0; i < out.boxes.rows(); ++i)
    for (std::size_t k = 0; k < 3; ++k) out.boxes(i, k) = softplus(out.boxes(i, k));
  out.rot_logits = mlp_forward(features.node_features, mlp_group(w, "decoder/angle"));
  detail::check_finite(out.boxes, "layout decoder");
  detail::check_finite(out.rot_logits, "layout decoder");
  return out;
}

/// Shape-code MLP: N x 1280 conditioning vectors.
inline Matrix shape_code(const GraphFeatureSet& features, const ModelWeights& w) {
  Matrix c = mlp_forward(features.node_features, mlp_group(w, "shape"));
  detail::check_finite(c, "shape code MLP");
  return c;
}

/// Category tables stored in the weights.
inline CategoryTables category_tables(const ModelWeights& w) {
  return {w.matrix("embed/object"), w.matrix("embed/relation")};
}

}  // namespace p3d
