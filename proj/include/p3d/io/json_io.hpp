#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "p3d/core/error.hpp"
#include "p3d/geometry/layout.hpp"
#include "p3d/graph/scene_graph.hpp"

namespace p3d {

using nlohmann::json;

namespace detail {

inline const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError("expected object", path);
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(std::string("missing field '") + key + "'", path);
  return *it;
}

inline int require_int(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) throw SchemaError("expected integer", path + "/" + key);
  return v.get<int>();
}

inline double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError("expected number", path);
  return v.get<double>();
}

inline json parse_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what(), "/");
  }
}

}  // namespace detail

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

/// One layout record: {"node", "box": [w,l,h,cx,cy,cz], "angle_bin"?, "angle_deg"?}.
/// angle_bin wins when both are present.
inline std::pair<int, Layout7DoF> layout_record_from_json(const json& rec, const std::string& path) {
  const int node = detail::require_int(rec, "node", path);
  const json& box = detail::require(rec, "box", path);
  if (!box.is_array() || box.size() != 6) throw SchemaError("box must be [w,l,h,cx,cy,cz]", path + "/box");
  Layout7DoF b;
  double* fields[6] = {&b.w, &b.l, &b.h, &b.cx, &b.cy, &b.cz};
  for (std::size_t k = 0; k < 6; ++k) *fields[k] = detail::number_at(box[k], path + "/box/" + std::to_string(k));
  if (rec.contains("angle_bin")) {
    if (!rec["angle_bin"].is_number_integer()) throw SchemaError("expected integer", path + "/angle_bin");
    b.angle_bin = rec["angle_bin"].get<int>();
  } else if (rec.contains("angle_deg")) {
    b.angle_bin = bin_angle(detail::number_at(rec["angle_deg"], path + "/angle_deg"));
  }
  validate_layout(b, path);
  return {node, b};
}

inline json layout_record_to_json(int node, const Layout7DoF& b) {
  return json{{"node", node},
              {"box", {b.w, b.l, b.h, b.cx, b.cy, b.cz}},
              {"angle_bin", b.angle_bin},
              {"angle_deg", unbin_angle(b.angle_bin)}};
}

inline LayoutMap layouts_from_json(const json& doc, const std::string& base = "") {
  const json* list = &doc;
  std::string prefix = base;
  if (doc.is_object() && doc.contains("layouts")) {
    list = &doc["layouts"];
    prefix += "/layouts";
  }
  if (!list->is_array()) throw SchemaError("expected a list of layout records", prefix.empty() ? "/" : prefix);
  LayoutMap out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string path = prefix + "/" + std::to_string(i);
    auto [node, box] = layout_record_from_json((*list)[i], path);
    if (!out.emplace(node, box).second) throw ValidationError("duplicate layout for node " + std::to_string(node), path);
  }
  return out;
}

inline json layouts_to_json(const LayoutMap& layouts) {
  json list = json::array();
  for (const auto& [node, b] : layouts) list.push_back(layout_record_to_json(node, b));
  return list;
}

inline json layouts_to_json(std::span<const Layout7DoF> layouts) {
  json list = json::array();
  for (std::size_t i = 0; i < layouts.size(); ++i) list.push_back(layout_record_to_json(static_cast<int>(i), layouts[i]));
  return list;
}

inline std::vector<Layout7DoF> layouts_as_vector(const LayoutMap& m, std::size_t n) {
  std::vector<Layout7DoF> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = m.find(static_cast<int>(i));
    if (it == m.end()) throw ValidationError("missing layout for node " + std::to_string(i));
    out[i] = it->second;
  }
  return out;
}

inline SceneGraph scene_graph_from_json(const json& doc, std::shared_ptr<const Vocabulary> vocab) {
  if (!doc.is_object()) throw SchemaError("scene graph must be a JSON object", "/");
  std::string id;
  if (doc.contains("id")) {
    if (!doc["id"].is_string()) throw SchemaError("expected string", "/id");
    id = doc["id"].get<std::string>();
  }
  const json& nodes = detail::require(doc, "nodes", "");
  if (!nodes.is_array()) throw SchemaError("expected array", "/nodes");
  std::vector<GraphNode> parsed_nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "/nodes/" + std::to_string(i);
    const int node_id = detail::require_int(nodes[i], "id", path);
    const json& cat = detail::require(nodes[i], "category", path);
    if (!cat.is_string()) throw SchemaError("expected string", path + "/category");
    auto cid = vocab->object_id(cat.get<std::string>());
    if (!cid) throw ValidationError("unknown category name '" + cat.get<std::string>() + "'", path + "/category");
    parsed_nodes.push_back({node_id, *cid});
  }
  std::vector<GraphEdge> parsed_edges;
  if (doc.contains("edges")) {
    const json& edges = doc["edges"];
    if (!edges.is_array()) throw SchemaError("expected array", "/edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string path = "/edges/" + std::to_string(i);
      const int s = detail::require_int(edges[i], "subject", path);
      const int o = detail::require_int(edges[i], "object", path);
      const json& pred = detail::require(edges[i], "predicate", path);
      if (!pred.is_string()) throw SchemaError("expected string", path + "/predicate");
      auto rid = vocab->relation_id(pred.get<std::string>());
      if (!rid) throw ValidationError("unknown relation name '" + pred.get<std::string>() + "'", path + "/predicate");
      parsed_edges.push_back({s, *rid, o});
    }
  }
  std::optional<LayoutMap> gt;
  if (doc.contains("gt_layouts") && !doc["gt_layouts"].is_null()) gt = layouts_from_json(doc["gt_layouts"], "/gt_layouts");
  return SceneGraph(std::move(id), std::move(parsed_nodes), std::move(parsed_edges), std::move(vocab), std::move(gt));
}

inline SceneGraph parse_scene_graph(std::string_view text, std::shared_ptr<const Vocabulary> vocab = default_vocabulary()) {
  return scene_graph_from_json(detail::parse_text(text), std::move(vocab));
}

inline json scene_graph_to_json(const SceneGraph& g) {
  json doc;
  doc["id"] = g.id();
  doc["nodes"] = json::array();
  for (const auto& n : g.nodes()) doc["nodes"].push_back({{"id", n.node_id}, {"category", g.category_name(n.node_id)}});
  doc["edges"] = json::array();
  for (const auto& e : g.edges())
    doc["edges"].push_back({{"subject", e.subject}, {"predicate", g.predicate_name(e)}, {"object", e.object}});
  if (g.gt_layouts()) {
    json list = json::array();
    for (const auto& [node, b] : *g.gt_layouts())
      list.push_back({{"node", node}, {"box", {b.w, b.l, b.h, b.cx, b.cy, b.cz}}, {"angle_deg", unbin_angle(b.angle_bin)}});
    doc["gt_layouts"] = std::move(list);
  }
  return doc;
}

inline std::string serialize_scene_graph(const SceneGraph& g) { return scene_graph_to_json(g).dump(2); }

inline SceneGraph load_scene_graph(const std::string& path, std::shared_ptr<const Vocabulary> vocab = default_vocabulary()) {
  return parse_scene_graph(read_text_file(path), std::move(vocab));
}

}  // namespace p3d
