#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "p3d/core/error.hpp"
#include "p3d/geometry/layout.hpp"
#include "p3d/graph/vocabulary.hpp"

namespace p3d {

struct GraphNode {
  int node_id = 0;
  int category = 0;
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  int subject = 0;
  int predicate = 0;
  int object = 0;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

using LayoutMap = std::map<int, Layout7DoF>;

/// Validated, immutable scene graph. Nodes are stored by node id, which is
/// dense in [0, N).
class SceneGraph {
 public:
  SceneGraph(std::string id, std::vector<GraphNode> nodes, std::vector<GraphEdge> edges,
             std::shared_ptr<const Vocabulary> vocab, std::optional<LayoutMap> gt_layouts = std::nullopt)
      : id_(std::move(id)),
        nodes_(std::move(nodes)),
        edges_(std::move(edges)),
        gt_layouts_(std::move(gt_layouts)),
        vocab_(std::move(vocab)) {
    validate();
  }

  const std::string& id() const noexcept { return id_; }
  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  const std::optional<LayoutMap>& gt_layouts() const noexcept { return gt_layouts_; }
  const Vocabulary& vocab() const noexcept { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocab_ptr() const noexcept { return vocab_; }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const std::string& category_name(int node_id) const {
    return vocab_->object(nodes_.at(static_cast<std::size_t>(node_id)).category).name;
  }
  const std::string& predicate_name(const GraphEdge& e) const { return vocab_->relation(e.predicate).name; }

  SceneGraph with_gt_layouts(std::optional<LayoutMap> layouts) const {
    return SceneGraph(id_, nodes_, edges_, vocab_, std::move(layouts));
  }

  friend bool operator==(const SceneGraph& a, const SceneGraph& b) {
    return a.id_ == b.id_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.gt_layouts_ == b.gt_layouts_ &&
           *a.vocab_ == *b.vocab_;
  }

 private:
  void validate() {
    if (!vocab_) throw ValidationError("scene graph needs a vocabulary");
    if (nodes_.empty()) throw ValidationError("N >= 1 violated: empty node list", "/nodes");
    const int n = static_cast<int>(nodes_.size());
    std::vector<bool> seen(nodes_.size(), false);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& node = nodes_[i];
      const std::string path = "/nodes/" + std::to_string(i);
      if (node.node_id < 0 || node.node_id >= n)
        throw ValidationError("node ids must be dense in [0, N); got " + std::to_string(node.node_id), path + "/id");
      if (seen[static_cast<std::size_t>(node.node_id)])
        throw ValidationError("duplicate node_id " + std::to_string(node.node_id), path + "/id");
      seen[static_cast<std::size_t>(node.node_id)] = true;
      if (node.category < 0 || node.category >= static_cast<int>(vocab_->objects().size()))
        throw ValidationError("category outside vocabulary", path + "/category");
    }
    std::sort(nodes_.begin(), nodes_.end(), [](const auto& a, const auto& b) { return a.node_id < b.node_id; });
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const auto& e = edges_[i];
      const std::string path = "/edges/" + std::to_string(i);
      if (e.subject < 0 || e.subject >= n)
        throw ValidationError("dangling endpoint: subject " + std::to_string(e.subject), path + "/subject");
      if (e.object < 0 || e.object >= n)
        throw ValidationError("dangling endpoint: object " + std::to_string(e.object), path + "/object");
      if (e.subject == e.object) throw ValidationError("self-edge not allowed", path);
      if (e.predicate < 0 || e.predicate >= static_cast<int>(vocab_->relations().size()))
        throw ValidationError("predicate outside vocabulary", path + "/predicate");
    }
    if (gt_layouts_) {
      for (const auto& [node, box] : *gt_layouts_) {
        if (node < 0 || node >= n)
          throw ValidationError("layout for unknown node " + std::to_string(node), "/gt_layouts");
        validate_layout(box, "/gt_layouts/" + std::to_string(node));
      }
    }
  }

  std::string id_;
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::optional<LayoutMap> gt_layouts_;
  std::shared_ptr<const Vocabulary> vocab_;
};

struct RelationshipTriplet {
  std::string subject;
  std::string predicate;
  std::string object;
  friend bool operator==(const RelationshipTriplet&, const RelationshipTriplet&) = default;
};

/// One triplet per edge, in edge order.
inline std::vector<RelationshipTriplet> triplets(const SceneGraph& g) {
  std::vector<RelationshipTriplet> out;
  out.reserve(g.edge_count());
  for (const auto& e : g.edges())
    out.push_back({g.category_name(e.subject), g.predicate_name(e), g.category_name(e.object)});
  return out;
}

}  // namespace p3d
