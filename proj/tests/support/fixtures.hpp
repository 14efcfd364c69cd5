#pragma once

#include <string>
#include <vector>

#include "p3d/io/json_io.hpp"

namespace p3d::testing {

inline std::string fixture(const std::string& name) { return std::string(P3D_FIXTURE_DIR) + "/" + name; }
inline std::string data_file(const std::string& name) { return std::string(P3D_DATA_DIR) + "/" + name; }

inline SceneGraph bedroom_graph() { return load_scene_graph(fixture("bedroom_graph.json")); }

inline std::vector<Layout7DoF> bedroom_layouts() {
  const auto g = bedroom_graph();
  return layouts_as_vector(layouts_from_json(detail::parse_text(read_text_file(fixture("bedroom_layouts.json")))),
                           g.node_count());
}

/// Captures the what() of the exception thrown by fn, or "" if none.
template <typename E, typename Fn>
std::string error_text(Fn&& fn) {
  try {
    fn();
  } catch (const E& e) {
    return e.what();
  }
  return "";
}

}  // namespace p3d::testing
