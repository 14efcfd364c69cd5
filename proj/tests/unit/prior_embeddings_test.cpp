#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fixtures.hpp"
#include "p3d/io/embedding_file.hpp"
#include "p3d/prior/embeddings.hpp"
#include "p3d/prior/graph_features.hpp"

using namespace p3d;

namespace {

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s / (norm(a) * norm(b));
}

SceneGraph two_beds() {
  return parse_scene_graph(R"({"nodes": [{"id": 0, "category": "bed"}, {"id": 1, "category": "bed"},
    {"id": 2, "category": "desk"}], "edges": [{"subject": 0, "predicate": "left of", "object": 1},
    {"subject": 2, "predicate": "close by", "object": 1}]})");
}

SceneGraph lone_node() { return parse_scene_graph(R"({"nodes": [{"id": 0, "category": "sofa"}]})"); }

struct Inputs {
  Matrix v_o, v_r, v_ob, v_oc, v_rc;
  std::vector<double> v_f;
};

Inputs inputs_for(const SceneGraph& g, std::uint64_t seed = 7) {
  Inputs in;
  std::tie(in.v_o, in.v_r) = embed_categories(g, seed);
  in.v_ob = Matrix(g.node_count(), kFeatureDim);
  auto rng = CounterRng(seed);
  for (double& x : in.v_ob.data()) x = rng.normal();
  const PseudoEmbeddingProvider p;
  std::tie(in.v_oc, in.v_rc) = clip_features(g, p);
  in.v_f = llm_feature(g, p);
  return in;
}

}  // namespace

TEST(CategoryEmbedding, SameCategorySameRow) {
  const auto g = two_beds();
  const auto [v_o, v_r] = embed_categories(g, 11);
  for (std::size_t k = 0; k < v_o.cols(); ++k) EXPECT_EQ(v_o(0, k), v_o(1, k));
  EXPECT_NE(v_o(0, 0), v_o(2, 0));
}

TEST(CategoryEmbedding, Widths) {
  const auto [v_o, v_r] = embed_categories(two_beds(), 11);
  EXPECT_EQ(v_o.cols(), 64u);
  EXPECT_EQ(v_r.cols(), 128u);
  EXPECT_EQ(v_r.rows(), 2u);
}

TEST(CategoryEmbedding, SeedDeterminism) {
  const auto v = default_vocabulary();
  const auto a = CategoryTables::seeded(*v, 64, 5);
  const auto b = CategoryTables::seeded(*v, 64, 5);
  const auto c = CategoryTables::seeded(*v, 64, 6);
  EXPECT_EQ(a.objects, b.objects);
  EXPECT_EQ(a.relations, b.relations);
  EXPECT_FALSE(a.objects == c.objects);
}

TEST(CategoryEmbedding, TableStddevIsInverseSqrtQ) {
  const auto t = CategoryTables::seeded(*default_vocabulary(), 64, 1);
  double sq = 0;
  for (double v : t.relations.data()) sq += v * v;
  const double sd = std::sqrt(sq / static_cast<double>(t.relations.data().size()));
  // 1920 samples: relative sd error ~ 1/sqrt(2 * 1920) ~ 1.6%.
  EXPECT_NEAR(sd, 1.0 / 8.0, 0.125 * 0.06);
}

TEST(CategoryEmbedding, CategoryOutsideTable) {
  CategoryTables small{Matrix(1, 64), Matrix(15, 128)};
  EXPECT_THROW(embed_categories(two_beds(), small), ValidationError);
}

TEST(LayoutEmbedding, ZeroVectorGivesZeroRow) {
  Matrix w(64, 7);
  auto rng = CounterRng(3);
  for (double& x : w.data()) x = rng.normal();
  const Layout7DoF zero{0, 0, 0, 0, 0, 0, 0};
  const auto out = embed_layout(std::span<const Layout7DoF>(&zero, 1), w);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(LayoutEmbedding, IdentityReproducesParameters) {
  Matrix w(64, 7);
  for (std::size_t i = 0; i < 7; ++i) w(i, i) = 1.0;
  const Layout7DoF b{1.5, 0.7, 0.9, -0.3, 2.0, 0.1, 6};
  const auto out = embed_layout(std::span<const Layout7DoF>(&b, 1), w);
  const double expected[7] = {1.5, 0.7, 0.9, -0.3, 2.0, 0.1, std::acos(-1.0) / 2};
  for (std::size_t k = 0; k < 7; ++k) EXPECT_DOUBLE_EQ(out(0, k), expected[k]);
  for (std::size_t k = 7; k < 64; ++k) EXPECT_EQ(out(0, k), 0.0);
}

TEST(LayoutEmbedding, IdenticalLayoutsIdenticalRows) {
  Matrix w(64, 7);
  auto rng = CounterRng(4);
  for (double& x : w.data()) x = rng.normal();
  const std::vector<Layout7DoF> ls = {{1, 2, 1, 0.5, 0.5, 0, 3}, {1, 2, 1, 0.5, 0.5, 0, 3}};
  const auto out = embed_layout(ls, w);
  for (std::size_t k = 0; k < 64; ++k) EXPECT_EQ(out(0, k), out(1, k));
}

TEST(LayoutEmbedding, NeedsGtLayouts) {
  EXPECT_THROW(embed_layout(two_beds(), Matrix(64, 7)), ValidationError);
  const auto partial = lone_node().with_gt_layouts(LayoutMap{});
  EXPECT_THROW(embed_layout(partial, Matrix(64, 7)), ValidationError);
}

TEST(PseudoEmbedding, DeterministicAndUnitNorm) {
  for (const char* prompt : {"", "chair", "bed left of wardrobe", "\xc3\xa9tag\xc3\xa8re"}) {
    const auto a = pseudo_clip_embed(prompt);
    EXPECT_EQ(a, pseudo_clip_embed(prompt));
    EXPECT_EQ(a.size(), 512u);
    EXPECT_NEAR(norm(a), 1.0, 1e-6);
    const auto l = pseudo_llm_embed(prompt);
    EXPECT_EQ(l.size(), 768u);
    EXPECT_NEAR(norm(l), 1.0, 1e-6);
  }
}

TEST(PseudoEmbedding, OneCharacterChangeDecorrelates) {
  auto rng = CounterRng(99);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string p;
    const std::size_t len = 3 + rng.below(20);
    for (std::size_t k = 0; k < len; ++k) p += static_cast<char>('a' + rng.below(26));
    std::string q = p;
    const std::size_t pos = rng.below(len);
    q[pos] = static_cast<char>('a' + (q[pos] - 'a' + 1 + rng.below(25)) % 26);
    worst = std::max(worst, std::abs(cosine(pseudo_clip_embed(p), pseudo_clip_embed(q))));
  }
  EXPECT_LT(worst, 0.5);
}

TEST(FileEmbedding, LookupFallbackAndDimCheck) {
  EmbeddingTable table;
  table["chair"] = std::vector<float>(512, 0.0f);
  table["chair"][3] = 2.0f;
  table["short"] = std::vector<float>(8, 1.0f);
  const auto path = (std::filesystem::temp_directory_path() / "p3d_embed_test.p3de").string();
  save_embedding_file(path, table);
  const FileEmbeddingProvider p(load_embedding_file(path));
  std::filesystem::remove(path);
  EXPECT_EQ(p.size(), 2u);
  const auto v = p.embed_text("chair", 512);
  EXPECT_DOUBLE_EQ(v[3], 1.0);
  EXPECT_EQ(p.embed_text("table", 512), pseudo_clip_embed("table"));
  EXPECT_THROW(p.embed_text("short", 512), ValidationError);
}

TEST(EmbeddingFile, RejectsBadMagic) {
  std::stringstream s("NOPE....");
  EXPECT_THROW(read_embedding_file(s), IoError);
}

TEST(Assemble, DefaultWidths) {
  const auto g = two_beds();
  const auto in = inputs_for(g);
  const auto fs = assemble_g_dagger(g, in.v_o, in.v_ob, in.v_oc, in.v_r, in.v_rc, in.v_f);
  EXPECT_EQ(fs.node_features.cols(), 1408u);
  EXPECT_EQ(fs.edge_features.cols(), 1408u);
  EXPECT_EQ(fs.node_features.rows(), 3u);
  EXPECT_EQ(fs.edge_features.rows(), 2u);
  EXPECT_EQ(fs.provenance, Provenance::TrainingGDagger);
}

TEST(Assemble, BlocksSliceBackExactly) {
  const auto g = two_beds();
  const auto in = inputs_for(g);
  const auto fs = assemble_g_dagger(g, in.v_o, in.v_ob, in.v_oc, in.v_r, in.v_rc, in.v_f);
  const auto b = node_blocks(64, 512, 768);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 64; ++k) {
      EXPECT_EQ(fs.node_features(i, b.category_begin + k), in.v_o(i, k));
      EXPECT_EQ(fs.node_features(i, b.layout_begin + k), in.v_ob(i, k));
    }
    for (std::size_t k = 0; k < 512; ++k) EXPECT_EQ(fs.node_features(i, b.clip_begin + k), in.v_oc(i, k));
    for (std::size_t k = 0; k < 768; ++k) EXPECT_EQ(fs.node_features(i, b.global_begin + k), in.v_f[k]);
  }
  for (std::size_t e = 0; e < 2; ++e) {
    for (std::size_t k = 0; k < 128; ++k) EXPECT_EQ(fs.edge_features(e, k), in.v_r(e, k));
    for (std::size_t k = 0; k < 512; ++k) EXPECT_EQ(fs.edge_features(e, 128 + k), in.v_rc(e, k));
    for (std::size_t k = 0; k < 768; ++k) EXPECT_EQ(fs.edge_features(e, 640 + k), in.v_f[k]);
  }
}

TEST(Assemble, ZeroGlobalVectorZeroesTail) {
  const auto g = two_beds();
  auto in = inputs_for(g);
  std::fill(in.v_f.begin(), in.v_f.end(), 0.0);
  const auto fs = assemble_g_dagger(g, in.v_o, in.v_ob, in.v_oc, in.v_r, in.v_rc, in.v_f);
  for (const Matrix* m : {&fs.node_features, &fs.edge_features})
    for (std::size_t r = 0; r < m->rows(); ++r)
      for (std::size_t k = 1408 - 768; k < 1408; ++k) EXPECT_EQ((*m)(r, k), 0.0);
}

TEST(Assemble, NoEdges) {
  const auto g = lone_node();
  const auto in = inputs_for(g);
  const auto fs = assemble_g_dagger(g, in.v_o, in.v_ob, in.v_oc, in.v_r, in.v_rc, in.v_f);
  EXPECT_EQ(fs.node_features.rows(), 1u);
  EXPECT_EQ(fs.node_features.cols(), 1408u);
  EXPECT_EQ(fs.edge_features.rows(), 0u);
  EXPECT_EQ(fs.edge_features.cols(), 1408u);
}

TEST(Assemble, DimensionMismatch) {
  const auto g = two_beds();
  const auto in = inputs_for(g);
  EXPECT_THROW(assemble_g_dagger(g, in.v_o, Matrix(3, 32), in.v_oc, in.v_r, in.v_rc, in.v_f), ValidationError);
  EXPECT_THROW(assemble_g_dagger(g, in.v_o, Matrix(2, 64), in.v_oc, in.v_r, in.v_rc, in.v_f), ValidationError);
  EXPECT_THROW(assemble_g_dagger(g, in.v_o, in.v_ob, in.v_oc, Matrix(2, 64), in.v_rc, in.v_f), ValidationError);
}

TEST(Assemble, NonFiniteRejected) {
  const auto g = two_beds();
  auto in = inputs_for(g);
  in.v_f[5] = std::nan("");
  EXPECT_THROW(assemble_g_dagger(g, in.v_o, in.v_ob, in.v_oc, in.v_r, in.v_rc, in.v_f), ValidationError);
}

TEST(AssembleInference, SubstitutionIdentity) {
  const auto g = two_beds();
  const auto in = inputs_for(g);
  const auto a = assemble_g_dagger(g, in.v_o, in.v_ob, in.v_oc, in.v_r, in.v_rc, in.v_f);
  const auto b = assemble_g_ddagger(g, in.v_o, in.v_ob, in.v_oc, in.v_r, in.v_rc, in.v_f);
  EXPECT_EQ(a.node_features, b.node_features);
  EXPECT_EQ(a.edge_features, b.edge_features);
  EXPECT_EQ(b.provenance, Provenance::InferenceGDdagger);
}

TEST(AssembleInference, OnlyLatentBlockChanges) {
  const auto g = two_beds();
  const auto in = inputs_for(g);
  Matrix z(3, 64);
  auto rng = CounterRng(12);
  for (double& x : z.data()) x = rng.normal();
  const auto a = assemble_g_dagger(g, in.v_o, in.v_ob, in.v_oc, in.v_r, in.v_rc, in.v_f);
  const auto b = assemble_g_ddagger(g, in.v_o, z, in.v_oc, in.v_r, in.v_rc, in.v_f);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 1408; ++k) {
      if (k >= 64 && k < 128)
        EXPECT_EQ(b.node_features(i, k), z(i, k - 64));
      else
        EXPECT_EQ(b.node_features(i, k), a.node_features(i, k));
    }
  EXPECT_EQ(a.edge_features, b.edge_features);
}

TEST(AssembleInference, SeededDeterminism) {
  const auto g = two_beds();
  auto make = [&] {
    const auto in = inputs_for(g, 21);
    Matrix z(3, 64);
    auto rng = CounterRng::substream(5, 1);
    for (double& x : z.data()) x = rng.normal();
    return assemble_g_ddagger(g, in.v_o, z, in.v_oc, in.v_r, in.v_rc, in.v_f);
  };
  EXPECT_EQ(make().node_features, make().node_features);
}
