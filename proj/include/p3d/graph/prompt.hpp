#pragma once

#include <string>
#include <string_view>

#include "p3d/graph/scene_graph.hpp"

namespace p3d {

struct LlmPrompt {
  std::string instruction;
  std::string document;

  /// Lookup key for externally computed sentence embeddings.
  std::string key() const { return instruction + "\n" + document; }
};

inline std::string triplet_text(const RelationshipTriplet& t) {
  return t.subject + " " + t.predicate + " " + t.object;
}

/// Instruction "Represent the {domain} {text_type} for {task}" plus the edge
/// triplets as "s p o" clauses joined by ". " and ending with ".".
inline LlmPrompt build_llm_prompt(const SceneGraph& g, std::string_view domain = "Science",
                                  std::string_view text_type = "document", std::string_view task = "summarization") {
  LlmPrompt p;
  p.instruction = "Represent the ";
  p.instruction.append(domain).append(" ").append(text_type).append(" for ").append(task);
  const auto ts = triplets(g);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i) p.document += ". ";
    p.document += triplet_text(ts[i]);
  }
  if (!ts.empty()) p.document += ".";
  return p;
}

}  // namespace p3d
