#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "p3d/consistency/checker.hpp"
#include "p3d/diffusion/sampler.hpp"
#include "p3d/engine/config.hpp"
#include "p3d/io/embedding_file.hpp"
#include "p3d/io/json_io.hpp"
#include "p3d/io/tensor_file.hpp"
#include "p3d/nn/models.hpp"
#include "p3d/optim/category_sizes.hpp"
#include "p3d/optim/solver.hpp"
#include "p3d/prior/embeddings.hpp"
#include "p3d/prior/graph_features.hpp"

namespace p3d {

/// Read-only state shared by every request.
class Engine {
 public:
  explicit Engine(EngineConfig cfg) : cfg_(std::move(cfg)), weights_(load_weights(cfg_)) {
    if (!cfg_.embeddings.empty())
      embeddings_ = std::make_unique<FileEmbeddingProvider>(load_embedding_file(cfg_.embeddings));
    else
      embeddings_ = std::make_unique<PseudoEmbeddingProvider>();
    if (!cfg_.category_sizes.empty())
      sizes_ = CategorySizes::from_json(parse_text_or_throw(read_text_file(cfg_.category_sizes)));
    schedule_ = build_schedule(cfg_.diffusion.steps, cfg_.diffusion.beta_start, cfg_.diffusion.beta_end);
  }

  const EngineConfig& config() const noexcept { return cfg_; }
  const ModelWeights& weights() const noexcept { return weights_; }
  const EmbeddingProvider& embeddings() const noexcept { return *embeddings_; }
  const CategorySizes& sizes() const noexcept { return sizes_; }
  const NoiseSchedule& schedule() const noexcept { return schedule_; }

 private:
  static ModelWeights load_weights(const EngineConfig& c) {
    if (!c.weights.empty()) return ModelWeights::from_tensors(load_tensor_file(c.weights), c.model);
    log::info("no weights file given; using seeded initialization (weight seed " + std::to_string(c.weight_seed) + ")");
    return ModelWeights::seeded(c.model, c.weight_seed);
  }

  static nlohmann::json parse_text_or_throw(const std::string& text) { return detail::parse_text(text); }

  EngineConfig cfg_;
  ModelWeights weights_;
  std::unique_ptr<EmbeddingProvider> embeddings_;
  CategorySizes sizes_;
  NoiseSchedule schedule_;
};

struct SynthResult {
  std::vector<Layout7DoF> layouts;
  Matrix codes;  // N x shape_code
  ConsistencyReport report;
  std::vector<ShapeLatent> latents;  // filled only when requested
};

/// Graph -> inference features -> encoder -> layout and shape heads.
inline SynthResult synthesize(const Engine& engine, const SceneGraph& g, std::uint64_t seed,
                              bool with_latents = false) {
  const auto& w = engine.weights();
  const auto& mc = w.config();
  if (g.vocab().objects().size() != mc.object_vocab || g.vocab().relations().size() != mc.relation_vocab)
    throw ValidationError("graph vocabulary does not match the model's category tables");
  const auto [v_o, v_r] = embed_categories(g, category_tables(w));
  const auto [v_oc, v_rc] = clip_features(g, engine.embeddings(), mc.clip_dim);
  const auto v_f = llm_feature(g, engine.embeddings(), mc.llm_dim);
  const Matrix z = sample_prior_latent(g.node_count(), mc.latent(), seed);
  const auto feats = assemble_g_ddagger(g, v_o, z, v_oc, v_r, v_rc, v_f);
  const auto topo = topology(g);
  const auto encoded = encode_graph(feats, topo, w);

  SynthResult out;
  out.layouts = decode_layout(encoded, w).layouts();
  out.codes = shape_code(encoded, w);
  out.report = consistency_report(g, out.layouts, engine.config().solver.thresholds);
  if (with_latents) {
    const auto& dc = engine.config().diffusion;
    const LinearDenoiser den(dc.denoiser_scale, mc.shape_code, dc.denoiser_rank, engine.config().weight_seed);
    for (std::size_t i = 0; i < g.node_count(); ++i)
      out.latents.push_back(ancestral_sample(den, out.codes.row(i), engine.schedule(), CounterRng::substream(seed, i).next_u64()));
  }
  return out;
}

inline TensorMap synth_tensors(const SynthResult& r) {
  TensorMap t;
  const auto rows = static_cast<std::uint32_t>(r.codes.rows());
  const auto cols = static_cast<std::uint32_t>(r.codes.cols());
  t["codes/shape"] = Tensor{{rows, cols}, std::vector<float>(r.codes.data().begin(), r.codes.data().end())};
  if (!r.latents.empty()) {
    const auto side = static_cast<std::uint32_t>(kLatentSide);
    Tensor lat{{static_cast<std::uint32_t>(r.latents.size()), side, side, side}, {}};
    for (const auto& s : r.latents) lat.values.insert(lat.values.end(), s.cells.begin(), s.cells.end());
    t["latent/s0"] = std::move(lat);
  }
  return t;
}

inline nlohmann::json trace_to_json(const SolveTrace& t) {
  return {{"objective", t.objective}, {"collision_volume", t.collision_volume}, {"violations", t.violations}};
}

/// Layouts for every node of `g` from a layouts document.
inline std::vector<Layout7DoF> layouts_for_graph(const SceneGraph& g, const nlohmann::json& doc, const std::string& path) {
  const LayoutMap m = layouts_from_json(doc, path);
  if (m.size() != g.node_count())
    throw ValidationError("got " + std::to_string(m.size()) + " layouts for " + std::to_string(g.node_count()) + " nodes",
                          path.empty() ? "/" : path);
  return layouts_as_vector(m, g.node_count());
}

/// Refinement targets when none are given: the graph's GT layouts if present,
/// otherwise a solver layout for the same graph.
inline std::vector<Layout7DoF> default_refine_targets(const Engine& engine, const SceneGraph& g, const SolverConfig& cfg) {
  if (g.gt_layouts()) return layouts_as_vector(*g.gt_layouts(), g.node_count());
  return solve_from_graph(g, cfg, engine.sizes()).layouts;
}

}  // namespace p3d
