#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "tpm/error.hpp"

namespace tpm {

/// Abstract logical clock reading. One tick is one clock reading; weights
/// between timestamps are plain tick differences.
struct Timestamp {
  std::uint64_t ticks = 0;

  constexpr Timestamp() = default;
  constexpr explicit Timestamp(std::uint64_t t) : ticks(t) {}

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
};

/// Distance from an earlier to a later timestamp. Caller guarantees order.
constexpr std::uint64_t operator-(Timestamp later, Timestamp earlier) {
  return later.ticks - earlier.ticks;
}

enum class NodeKind { Event, ArtifactInstance, AgentInstance, FolderNode, PathNode };

enum class Relation {
  Used,
  WasGeneratedBy,
  WasTriggeredBy,
  WasDerivedFrom,
  WasControlledBy,
  HappenedBefore,
  StartedBefore,
  IsPartOf,
};

inline constexpr std::array<NodeKind, 5> kAllNodeKinds = {
    NodeKind::Event, NodeKind::ArtifactInstance, NodeKind::AgentInstance,
    NodeKind::FolderNode, NodeKind::PathNode};

inline constexpr std::array<Relation, 8> kAllRelations = {
    Relation::Used,           Relation::WasGeneratedBy, Relation::WasTriggeredBy,
    Relation::WasDerivedFrom, Relation::WasControlledBy, Relation::HappenedBefore,
    Relation::StartedBefore,  Relation::IsPartOf};

constexpr std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Event: return "event";
    case NodeKind::ArtifactInstance: return "artifact";
    case NodeKind::AgentInstance: return "agent";
    case NodeKind::FolderNode: return "folder";
    case NodeKind::PathNode: return "path";
  }
  return "?";
}

constexpr std::string_view to_string(Relation rel) {
  switch (rel) {
    case Relation::Used: return "used";
    case Relation::WasGeneratedBy: return "wasGeneratedBy";
    case Relation::WasTriggeredBy: return "wasTriggeredBy";
    case Relation::WasDerivedFrom: return "wasDerivedFrom";
    case Relation::WasControlledBy: return "wasControlledBy";
    case Relation::HappenedBefore: return "happenedBefore";
    case Relation::StartedBefore: return "startedBefore";
    case Relation::IsPartOf: return "isPartOf";
  }
  return "?";
}

inline std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

inline std::optional<NodeKind> parse_node_kind(std::string_view text) {
  for (NodeKind k : kAllNodeKinds) {
    if (iequals(text, to_string(k))) return k;
  }
  return std::nullopt;
}

/// Relation names are matched case-insensitively ("happenedbefore" is fine).
inline std::optional<Relation> parse_relation(std::string_view text) {
  for (Relation r : kAllRelations) {
    if (iequals(text, to_string(r))) return r;
  }
  return std::nullopt;
}

constexpr bool is_container(NodeKind kind) {
  return kind == NodeKind::FolderNode || kind == NodeKind::PathNode;
}

constexpr bool is_causal(Relation rel) {
  return rel == Relation::Used || rel == Relation::WasGeneratedBy ||
         rel == Relation::WasTriggeredBy || rel == Relation::WasDerivedFrom;
}

constexpr bool is_weighted(Relation rel) {
  return rel == Relation::HappenedBefore || rel == Relation::StartedBefore;
}

using Attributes = std::map<std::string, std::string>;

struct NodeRecord {
  std::string node_id;
  NodeKind kind = NodeKind::Event;
  std::string entity_id;
  /// Activity time; Event / ArtifactInstance / AgentInstance only.
  std::optional<Timestamp> timestamp;
  /// (start, duration); FolderNode / PathNode only.
  std::optional<Timestamp> start;
  std::optional<std::uint64_t> duration;
  Attributes attributes;
  bool timed = false;

  /// Point time for instances, start for containers.
  Timestamp time() const { return timestamp ? *timestamp : start.value_or(Timestamp{}); }
  /// Last instant covered by the node.
  Timestamp end_time() const {
    if (timestamp) return *timestamp;
    return Timestamp{start.value_or(Timestamp{}).ticks + duration.value_or(0)};
  }

  bool operator==(const NodeRecord&) const = default;
};

struct EdgeRecord {
  std::string from;
  std::string to;
  Relation relation = Relation::Used;
  std::optional<std::uint64_t> weight;

  bool operator==(const EdgeRecord&) const = default;
};

/// Identity of an edge; at most one edge per (from, relation, to).
inline std::string edge_key(std::string_view from, Relation rel, std::string_view to) {
  std::string key;
  key.reserve(from.size() + to.size() + 20);
  key += from;
  key += '|';
  key += to_string(rel);
  key += '|';
  key += to;
  return key;
}

inline std::string edge_key(const EdgeRecord& e) { return edge_key(e.from, e.relation, e.to); }

/// "<entity_id>@<ticks>", used when callers leave node ids blank.
inline std::string instance_id(std::string_view entity, Timestamp t) {
  return std::string(entity) + "@" + std::to_string(t.ticks);
}

/// Node ids are whitespace-free tokens that stay unambiguous in the text
/// formats and in edge keys.
inline bool valid_node_id(std::string_view id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '|' || c == '"' ||
           c == '#' || static_cast<unsigned char>(c) < 0x20;
  });
}

inline NodeRecord make_instance(NodeKind kind, std::string entity, Timestamp t,
                                Attributes attrs = {}) {
  NodeRecord n;
  n.kind = kind;
  n.node_id = instance_id(entity, t);
  n.entity_id = std::move(entity);
  n.timestamp = t;
  n.attributes = std::move(attrs);
  return n;
}

inline NodeRecord make_container(NodeKind kind, std::string name, Timestamp start,
                                 std::uint64_t duration, Attributes attrs = {}) {
  NodeRecord n;
  n.kind = kind;
  n.node_id = name;
  n.entity_id = std::move(name);
  n.start = start;
  n.duration = duration;
  n.attributes = std::move(attrs);
  return n;
}

}  // namespace tpm
