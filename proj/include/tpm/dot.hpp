#pragma once

#include <string>
#include <string_view>
#include <unordered_set>

#include "tpm/graph.hpp"
#include "tpm/model.hpp"

namespace tpm {

namespace detail {

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string dot_shape(NodeKind k) {
  switch (k) {
    case NodeKind::Event: return "shape=triangle";
    case NodeKind::ArtifactInstance: return "shape=circle";
    case NodeKind::AgentInstance: return "shape=octagon";
    case NodeKind::FolderNode: return "shape=box";
    case NodeKind::PathNode: return "shape=box, style=dashed";
  }
  return "shape=ellipse";
}

inline std::string dot_label(const NodeRecord& n) {
  if (n.timestamp) return n.entity_id + "@t" + std::to_string(n.timestamp->ticks);
  return n.node_id + " [t" + std::to_string(n.time().ticks) + ", t" + std::to_string(n.end_time().ticks) + "]";
}

}  // namespace detail

/// Graphviz digraph; shapes follow node kinds and temporal edges carry
/// their weights.
inline std::string to_dot(const TpmGraph& g, std::string_view name = "tpm") {
  std::string out = "digraph " + detail::dot_quote(name) + " {\n  rankdir=LR;\n";
  for (const NodeRecord* n : g.nodes()) {
    out += "  " + detail::dot_quote(n->node_id) + " [" + detail::dot_shape(n->kind) +
           ", label=" + detail::dot_quote(detail::dot_label(*n)) + "];\n";
  }
  for (const EdgeRecord* e : g.edges()) {
    std::string label(to_string(e->relation));
    if (e->weight) label += " (" + std::to_string(*e->weight) + ")";
    out += "  " + detail::dot_quote(e->from) + " -> " + detail::dot_quote(e->to) +
           " [label=" + detail::dot_quote(label) + "];\n";
  }
  return out + "}\n";
}

/// A container with its members and the edges among them.
inline std::string container_to_dot(const TpmGraph& g, const std::string& container) {
  std::unordered_set<std::string> ids{container};
  for (const auto& m : g.members_of(container)) ids.insert(m);
  return to_dot(g.subgraph(ids), container);
}

}  // namespace tpm
