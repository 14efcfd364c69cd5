#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "p3d/core/hash.hpp"
#include "p3d/core/log.hpp"
#include "p3d/core/matrix.hpp"
#include "p3d/core/rng.hpp"
#include "p3d/geometry/layout.hpp"
#include "p3d/graph/prompt.hpp"
#include "p3d/graph/scene_graph.hpp"
#include "p3d/io/embedding_file.hpp"

namespace p3d {

inline constexpr std::size_t kFeatureDim = 64;     // Q
inline constexpr std::size_t kClipDim = 512;
inline constexpr std::size_t kLlmDim = 768;
inline constexpr std::size_t kLayoutParams = 7;    // w, l, h, cx, cy, cz, yaw

/// Text-to-vector provider. Implementations return unit-norm vectors and are
/// deterministic.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed_text(std::string_view prompt, std::size_t dim) const = 0;
};

inline void normalize_in_place(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > 0)
    for (double& x : v) x /= norm;
}

/// Stand-in for CLIP/LLM text encoders: the SHA-256 of the UTF-8 prompt keys
/// a counter generator, the draw is standard normal, then L2-normalized.
class PseudoEmbeddingProvider final : public EmbeddingProvider {
 public:
  std::vector<double> embed_text(std::string_view prompt, std::size_t dim) const override {
    auto rng = CounterRng::substream(sha256_key(prompt), dim);
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    normalize_in_place(v);
    return v;
  }
};

/// Serves vectors loaded from a P3DE file; unknown prompts fall back to the
/// pseudo provider with a one-time warning per key.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(EmbeddingTable table) : table_(std::move(table)) {}

  std::vector<double> embed_text(std::string_view prompt, std::size_t dim) const override {
    auto it = table_.find(std::string(prompt));
    if (it == table_.end()) {
      {
        std::lock_guard lock(mu_);
        if (warned_.insert(std::string(prompt)).second)
          log::warn("no stored embedding for prompt '" + std::string(prompt) + "', using pseudo embedding");
      }
      return fallback_.embed_text(prompt, dim);
    }
    if (it->second.size() != dim)
      throw ValidationError("stored embedding for '" + it->first + "' has dim " + std::to_string(it->second.size()) +
                            ", expected " + std::to_string(dim));
    std::vector<double> v(it->second.begin(), it->second.end());
    normalize_in_place(v);
    return v;
  }

  std::size_t size() const noexcept { return table_.size(); }

 private:
  EmbeddingTable table_;
  PseudoEmbeddingProvider fallback_;
  mutable std::mutex mu_;
  mutable std::set<std::string> warned_;
};

inline std::vector<double> pseudo_clip_embed(std::string_view prompt) {
  return PseudoEmbeddingProvider{}.embed_text(prompt, kClipDim);
}
inline std::vector<double> pseudo_llm_embed(std::string_view prompt) {
  return PseudoEmbeddingProvider{}.embed_text(prompt, kLlmDim);
}

/// Seeded category lookup tables: objects |O| x Q, relations |R| x 2Q, both
/// drawn from N(0, 1/Q).
struct CategoryTables {
  Matrix objects;
  Matrix relations;

  static CategoryTables seeded(const Vocabulary& vocab, std::size_t q, std::uint64_t seed) {
    CategoryTables t{Matrix(vocab.objects().size(), q), Matrix(vocab.relations().size(), 2 * q)};
    const double stddev = 1.0 / std::sqrt(static_cast<double>(q));
    auto obj_rng = CounterRng::substream(seed, 0x0b1ec7);
    for (double& v : t.objects.data()) v = obj_rng.normal(0.0, stddev);
    auto rel_rng = CounterRng::substream(seed, 0x5e1a7e);
    for (double& v : t.relations.data()) v = rel_rng.normal(0.0, stddev);
    return t;
  }

  std::size_t q() const noexcept { return objects.cols(); }
};

/// (V_O: N x Q, V_R: M x 2Q) by table lookup.
inline std::pair<Matrix, Matrix> embed_categories(const SceneGraph& g, const CategoryTables& tables) {
  const std::size_t q = tables.objects.cols();
  Matrix v_o(g.node_count(), q);
  for (const auto& n : g.nodes()) {
    if (n.category < 0 || static_cast<std::size_t>(n.category) >= tables.objects.rows())
      throw ValidationError("category outside vocabulary table", "/nodes/" + std::to_string(n.node_id));
    auto src = tables.objects.row(static_cast<std::size_t>(n.category));
    std::copy(src.begin(), src.end(), v_o.row(static_cast<std::size_t>(n.node_id)).begin());
  }
  Matrix v_r(g.edge_count(), tables.relations.cols());
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    const int p = g.edges()[i].predicate;
    if (p < 0 || static_cast<std::size_t>(p) >= tables.relations.rows())
      throw ValidationError("relation outside vocabulary table", "/edges/" + std::to_string(i));
    auto src = tables.relations.row(static_cast<std::size_t>(p));
    std::copy(src.begin(), src.end(), v_r.row(i).begin());
  }
  return {std::move(v_o), std::move(v_r)};
}

inline std::pair<Matrix, Matrix> embed_categories(const SceneGraph& g, std::uint64_t table_seed,
                                                  std::size_t q = kFeatureDim) {
  return embed_categories(g, CategoryTables::seeded(g.vocab(), q, table_seed));
}

/// The 7-vector fed to the layout embedding: box parameters plus yaw in
/// radians of the bin center.
inline std::array<double, kLayoutParams> layout_vector(const Layout7DoF& b) {
  return {b.w, b.l, b.h, b.cx, b.cy, b.cz, bin_radians(b.angle_bin)};
}

/// Rows of `projection` (Q x 7) applied to each layout 7-vector.
inline Matrix embed_layout(std::span<const Layout7DoF> layouts, const Matrix& projection) {
  if (projection.cols() != kLayoutParams) throw ValidationError("layout projection must have 7 columns");
  Matrix out(layouts.size(), projection.rows());
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    const auto x = layout_vector(layouts[i]);
    for (std::size_t r = 0; r < projection.rows(); ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < kLayoutParams; ++c) acc += projection(r, c) * x[c];
      out(i, r) = acc;
    }
  }
  return out;
}

/// V_O^B from the graph's GT layouts; training time only.
inline Matrix embed_layout(const SceneGraph& g, const Matrix& projection) {
  if (!g.gt_layouts()) throw ValidationError("GT layouts required for layout embedding", "/gt_layouts");
  std::vector<Layout7DoF> rows;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    auto it = g.gt_layouts()->find(static_cast<int>(i));
    if (it == g.gt_layouts()->end())
      throw ValidationError("missing GT layout for node " + std::to_string(i), "/gt_layouts");
    rows.push_back(it->second);
  }
  return embed_layout(rows, projection);
}

/// V_O^C / V_R^C: node prompts are category names, edge prompts are
/// "subject predicate object".
inline std::pair<Matrix, Matrix> clip_features(const SceneGraph& g, const EmbeddingProvider& clip,
                                               std::size_t dim = kClipDim) {
  Matrix nodes(g.node_count(), dim);
  for (const auto& n : g.nodes()) {
    const auto v = clip.embed_text(g.category_name(n.node_id), dim);
    std::copy(v.begin(), v.end(), nodes.row(static_cast<std::size_t>(n.node_id)).begin());
  }
  const auto ts = triplets(g);
  Matrix edges(ts.size(), dim);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto v = clip.embed_text(triplet_text(ts[i]), dim);
    std::copy(v.begin(), v.end(), edges.row(i).begin());
  }
  return {std::move(nodes), std::move(edges)};
}

/// V^F from the instruction prompt of the whole graph.
inline std::vector<double> llm_feature(const SceneGraph& g, const EmbeddingProvider& llm, std::size_t dim = kLlmDim) {
  return llm.embed_text(build_llm_prompt(g).key(), dim);
}

}  // namespace p3d
