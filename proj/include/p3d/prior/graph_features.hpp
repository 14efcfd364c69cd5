#pragma once

#include <span>
#include <string>

#include "p3d/core/matrix.hpp"
#include "p3d/graph/scene_graph.hpp"

namespace p3d {

enum class Provenance { TrainingGDagger, InferenceGDdagger };

/// Node rows are [V_O | V_O^B or V_O^Z | V_O^C | V^F];
/// edge rows are [V_R | V_R^C | V^F].
struct GraphFeatureSet {
  Matrix node_features;
  Matrix edge_features;
  Provenance provenance = Provenance::TrainingGDagger;
};

/// Column offsets of the node-row blocks for a given Q / CLIP width.
struct NodeBlocks {
  std::size_t category_begin = 0;
  std::size_t layout_begin = 0;
  std::size_t clip_begin = 0;
  std::size_t global_begin = 0;
  std::size_t width = 0;
};

inline NodeBlocks node_blocks(std::size_t q, std::size_t clip_dim, std::size_t llm_dim) {
  return {0, q, 2 * q, 2 * q + clip_dim, 2 * q + clip_dim + llm_dim};
}

namespace detail {

inline GraphFeatureSet assemble(const SceneGraph& g, const Matrix& v_o, const Matrix& layout_block, const Matrix& v_oc,
                                const Matrix& v_r, const Matrix& v_rc, std::span<const double> v_f, Provenance prov) {
  const std::size_t n = g.node_count();
  const std::size_t m = g.edge_count();
  if (layout_block.cols() != v_o.cols())
    throw ValidationError("layout block width " + std::to_string(layout_block.cols()) + " != Q " +
                          std::to_string(v_o.cols()));
  if (v_r.cols() != 2 * v_o.cols()) throw ValidationError("relation embedding width must be 2Q");
  if (v_oc.cols() != v_rc.cols() && m > 0) throw ValidationError("node and edge CLIP widths differ");
  const Matrix f_nodes = broadcast_rows(v_f, n);
  const Matrix f_edges = broadcast_rows(v_f, m);
  GraphFeatureSet out;
  out.node_features = hconcat(n, {&v_o, &layout_block, &v_oc, &f_nodes});
  Matrix v_r_fixed = v_r;
  Matrix v_rc_fixed = v_rc;
  if (m == 0) {
    // Keep the documented edge width even without edges.
    v_r_fixed = Matrix(0, 2 * v_o.cols());
    v_rc_fixed = Matrix(0, v_oc.cols());
  }
  out.edge_features = hconcat(m, {&v_r_fixed, &v_rc_fixed, &f_edges});
  if (!out.node_features.all_finite() || !out.edge_features.all_finite())
    throw ValidationError("assembled features contain non-finite values");
  out.provenance = prov;
  return out;
}

}  // namespace detail

/// Training-time representation with the GT layout embedding in block 2.
inline GraphFeatureSet assemble_g_dagger(const SceneGraph& g, const Matrix& v_o, const Matrix& v_ob, const Matrix& v_oc,
                                         const Matrix& v_r, const Matrix& v_rc, std::span<const double> v_f) {
  return detail::assemble(g, v_o, v_ob, v_oc, v_r, v_rc, v_f, Provenance::TrainingGDagger);
}

/// Inference-time representation with sampled latents in block 2.
inline GraphFeatureSet assemble_g_ddagger(const SceneGraph& g, const Matrix& v_o, const Matrix& v_oz, const Matrix& v_oc,
                                          const Matrix& v_r, const Matrix& v_rc, std::span<const double> v_f) {
  return detail::assemble(g, v_o, v_oz, v_oc, v_r, v_rc, v_f, Provenance::InferenceGDdagger);
}

}  // namespace p3d
