#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "p3d/p3d.hpp"
#include "p3d/engine/service.hpp"

namespace {

using namespace p3d;
using nlohmann::json;

struct Flags {
  std::string config;
  std::string graph;
  std::string layouts;
  std::string targets;
  std::string weights;
  std::string embeddings;
  std::string out;
  std::string trace;
  std::string codes;
  std::string gen;
  std::string ref;
  std::optional<std::uint64_t> seed;
  std::optional<int> port;
  std::optional<std::size_t> points;
  std::optional<std::size_t> max_iters;
  std::optional<double> overlap_weight;
  bool latents = false;
};

// defaults < config file < environment < flags
EngineConfig resolve_config(const Flags& f) {
  EngineConfig c;
  if (!f.config.empty()) apply_config_json(c, detail::parse_text(read_text_file(f.config)));
  apply_env(c);
  if (!f.weights.empty()) c.weights = f.weights;
  if (!f.embeddings.empty()) c.embeddings = f.embeddings;
  if (f.seed) c.seed = *f.seed;
  if (f.port) c.port = *f.port;
  if (f.points) c.points = *f.points;
  if (f.max_iters) c.solver.max_iters = *f.max_iters;
  if (f.overlap_weight) c.solver.overlap_weight = *f.overlap_weight;
  c.solver.seed = c.seed;
  return c;
}

void write_json(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::string default_codes_path(const std::string& out) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + "_codes.p3dw")).string();
}

int cmd_synth(const Flags& f) {
  const Engine engine(resolve_config(f));
  const SceneGraph g = load_scene_graph(f.graph);
  const auto r = synthesize(engine, g, engine.config().seed, f.latents);
  write_json(f.out, layouts_to_json(r.layouts));
  save_tensor_file(f.codes.empty() ? default_codes_path(f.out) : f.codes, synth_tensors(r));
  std::cout << report_to_text(r.report);
  return 0;
}

int cmd_solve(const Flags& f) {
  const EngineConfig cfg = resolve_config(f);
  CategorySizes sizes;
  if (!cfg.category_sizes.empty()) sizes = CategorySizes::from_json(detail::parse_text(read_text_file(cfg.category_sizes)));
  const SceneGraph g = load_scene_graph(f.graph);
  const auto r = solve_from_graph(g, cfg.solver, sizes);
  write_json(f.out, layouts_to_json(r.layouts));
  if (!f.trace.empty()) write_text_file(f.trace, r.trace.to_csv());
  std::cout << "iterations " << r.trace.size() << ", objective " << r.best_objective
            << (r.feasible ? ", feasible" : ", infeasible") << "\n";
  std::cout << report_to_text(consistency_report(g, r.layouts, cfg.solver.thresholds));
  return 0;
}

int cmd_refine(const Flags& f) {
  const EngineConfig cfg = resolve_config(f);
  const SceneGraph g = load_scene_graph(f.graph);
  const auto initial = layouts_for_graph(g, detail::parse_text(read_text_file(f.layouts)), "");
  std::vector<Layout7DoF> targets;
  if (!f.targets.empty())
    targets = layouts_for_graph(g, detail::parse_text(read_text_file(f.targets)), "");
  else if (g.gt_layouts())
    targets = layouts_as_vector(*g.gt_layouts(), g.node_count());
  else
    targets = solve_from_graph(g, cfg.solver).layouts;
  const auto r = refine_layouts(initial, targets, cfg.solver, &g);
  write_json(f.out, layouts_to_json(r.layouts));
  if (!f.trace.empty()) write_text_file(f.trace, r.trace.to_csv());
  std::cout << "iterations " << r.trace.size() << ", objective " << r.best_objective << "\n";
  return 0;
}

int cmd_check(const Flags& f) {
  const EngineConfig cfg = resolve_config(f);
  const SceneGraph g = load_scene_graph(f.graph);
  std::vector<Layout7DoF> layouts;
  if (!f.layouts.empty())
    layouts = layouts_for_graph(g, detail::parse_text(read_text_file(f.layouts)), "");
  else if (g.gt_layouts())
    layouts = layouts_as_vector(*g.gt_layouts(), g.node_count());
  else
    throw ValidationError("check needs --layouts or a graph with gt_layouts");
  const auto report = consistency_report(g, layouts, cfg.solver.thresholds);
  if (!f.out.empty()) write_json(f.out, report_to_json(report));
  std::cout << report_to_text(report);
  return 0;
}

int cmd_metrics(const Flags& f) {
  const EngineConfig cfg = resolve_config(f);
  const auto gen = load_collection(f.gen, cfg.points, cfg.seed);
  const auto ref = load_collection(f.ref, cfg.points, cfg.seed);
  json j{{"points", cfg.points},
         {"generated", gen.size()},
         {"reference", ref.size()},
         {"mmd", mmd(gen, ref)},
         {"cov", cov(gen, ref)}};
  if (gen.size() + ref.size() >= 2) j["one_nna"] = one_nna(gen, ref);
  if (!f.out.empty()) write_json(f.out, j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_serve(const Flags& f) {
  const Engine engine(resolve_config(f));
  serve(engine, engine.config().port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene-graph layout and shape engine"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--seed", f.seed, "random seed");
  };
  auto model = [&f](CLI::App* sub) {
    sub->add_option("--weights", f.weights, "P3DW weights file");
    sub->add_option("--embeddings", f.embeddings, "P3DE embedding table");
  };

  auto* synth = app.add_subcommand("synth", "synthesize layouts and shape codes");
  common(synth);
  model(synth);
  synth->add_option("--graph", f.graph)->required();
  synth->add_option("--out", f.out, "layouts JSON")->required();
  synth->add_option("--codes", f.codes, "shape-code tensor file");
  synth->add_flag("--latents", f.latents, "also sample shape latents into the codes file");

  auto* solve = app.add_subcommand("solve", "fit a layout to the graph rules");
  common(solve);
  solve->add_option("--graph", f.graph)->required();
  solve->add_option("--out", f.out)->required();
  solve->add_option("--trace", f.trace, "trace CSV");
  solve->add_option("--max-iters", f.max_iters);
  solve->add_option("--overlap-weight", f.overlap_weight);

  auto* refine = app.add_subcommand("refine", "refine layouts toward targets");
  common(refine);
  refine->add_option("--graph", f.graph)->required();
  refine->add_option("--layouts", f.layouts)->required();
  refine->add_option("--targets", f.targets);
  refine->add_option("--out", f.out)->required();
  refine->add_option("--trace", f.trace);
  refine->add_option("--max-iters", f.max_iters);

  auto* check = app.add_subcommand("check", "consistency report");
  common(check);
  check->add_option("--graph", f.graph)->required();
  check->add_option("--layouts", f.layouts);
  check->add_option("--out", f.out, "report JSON");

  auto* metrics = app.add_subcommand("metrics", "MMD / COV / 1-NNA between two cloud directories");
  common(metrics);
  metrics->add_option("--gen", f.gen)->required();
  metrics->add_option("--ref", f.ref)->required();
  metrics->add_option("--points", f.points);
  metrics->add_option("--out", f.out);

  auto* serve = app.add_subcommand("serve", "local HTTP JSON service");
  common(serve);
  model(serve);
  serve->add_option("--port", f.port);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(f);
    if (*solve) return cmd_solve(f);
    if (*refine) return cmd_refine(f);
    if (*check) return cmd_check(f);
    if (*metrics) return cmd_metrics(f);
    if (*serve) return cmd_serve(f);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
