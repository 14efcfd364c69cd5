#pragma once

#include "p3d/nn/models.hpp"
#include "p3d/prior/embeddings.hpp"
#include "p3d/prior/graph_features.hpp"

namespace p3d::testing {

/// Narrow network for fast tests; latent width equals q as required.
inline ModelConfig small_config() {
  ModelConfig c;
  c.q = 8;
  c.clip_dim = 16;
  c.llm_dim = 12;
  c.hidden = 16;
  c.gcn_layers = 2;
  c.mu_box = 6;
  c.mu_angle = 2;
  c.shape_code = 20;
  return c;
}

/// Full-pipeline features for g; the layout block comes from the GT layouts
/// (training) or from `z` (inference) when given.
inline GraphFeatureSet features(const SceneGraph& g, const ModelWeights& w, const Matrix* z = nullptr) {
  const auto& c = w.config();
  const PseudoEmbeddingProvider pseudo;
  const auto [v_o, v_r] = embed_categories(g, category_tables(w));
  const auto [v_oc, v_rc] = clip_features(g, pseudo, c.clip_dim);
  const auto v_f = llm_feature(g, pseudo, c.llm_dim);
  if (z) return assemble_g_ddagger(g, v_o, *z, v_oc, v_r, v_rc, v_f);
  return assemble_g_dagger(g, v_o, embed_layout(g, w.matrix("embed/layout")), v_oc, v_r, v_rc, v_f);
}

}  // namespace p3d::testing
