#pragma once

#include <algorithm>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/model.hpp"
#include "tpm/text.hpp"

namespace tpm {

enum class OpmKind { Artifact, Process, Agent };

constexpr std::string_view to_string(OpmKind kind) {
  switch (kind) {
    case OpmKind::Artifact: return "Artifact";
    case OpmKind::Process: return "Process";
    case OpmKind::Agent: return "Agent";
  }
  return "?";
}

inline std::optional<OpmKind> parse_opm_kind(std::string_view text) {
  for (OpmKind k : {OpmKind::Artifact, OpmKind::Process, OpmKind::Agent}) {
    if (iequals(text, to_string(k))) return k;
  }
  return std::nullopt;
}

/// The five OPM causal relations.
constexpr bool is_opm_relation(Relation rel) { return is_causal(rel) || rel == Relation::WasControlledBy; }

constexpr bool legal_opm_edge(OpmKind from, Relation rel, OpmKind to) {
  switch (rel) {
    case Relation::Used: return from == OpmKind::Process && to == OpmKind::Artifact;
    case Relation::WasGeneratedBy: return from == OpmKind::Artifact && to == OpmKind::Process;
    case Relation::WasTriggeredBy: return from == OpmKind::Process && to == OpmKind::Process;
    case Relation::WasDerivedFrom: return from == OpmKind::Artifact && to == OpmKind::Artifact;
    case Relation::WasControlledBy: return from == OpmKind::Process && to == OpmKind::Agent;
    default: return false;
  }
}

struct OpmNode {
  std::string id;
  OpmKind kind = OpmKind::Artifact;
  Attributes attributes;
  Position pos;

  bool operator==(const OpmNode& o) const {
    return id == o.id && kind == o.kind && attributes == o.attributes;
  }
};

struct OpmEdge {
  std::string from;
  std::string to;
  Relation relation = Relation::Used;
  /// Interaction time. For wasDerivedFrom and wasTriggeredBy this is the
  /// time on the `from` side.
  std::optional<Timestamp> time;
  /// Optional time on the `to` side of wasDerivedFrom / wasTriggeredBy.
  std::optional<Timestamp> source_time;
  Attributes attributes;
  Position pos;

  bool operator==(const OpmEdge& o) const {
    return from == o.from && to == o.to && relation == o.relation && time == o.time &&
           source_time == o.source_time && attributes == o.attributes;
  }
};

class OpmGraph {
 public:
  void add_node(OpmNode node) {
    if (index_.count(node.id) != 0) {
      throw Error(ErrorCode::DuplicateNodeId, "node '" + node.id + "' already exists", node.pos);
    }
    index_.emplace(node.id, nodes_.size());
    nodes_.push_back(std::move(node));
  }
  /// Edges are stored as given; endpoint checks belong to validate_opm.
  void add_edge(OpmEdge edge) { edges_.push_back(std::move(edge)); }

  const OpmNode* find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &nodes_[it->second];
  }
  const std::vector<OpmNode>& nodes() const { return nodes_; }
  const std::vector<OpmEdge>& edges() const { return edges_; }

  std::size_t count(OpmKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        nodes_.begin(), nodes_.end(), [kind](const OpmNode& n) { return n.kind == kind; }));
  }

  bool operator==(const OpmGraph& o) const { return nodes_ == o.nodes_ && edges_ == o.edges_; }

 private:
  std::vector<OpmNode> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<OpmEdge> edges_;
};

// --- file format ------------------------------------------------------------

inline OpmGraph parse_opm(std::string_view source) {
  OpmGraph g;
  text::for_each_line(source, [&](std::string_view line, std::size_t lineno) {
    const auto fields = text::split_fields(line, lineno);
    if (fields.empty()) return;
    const auto& head = fields[0];
    auto positional = [&](std::size_t i, const char* what) -> const text::Field& {
      if (i >= fields.size() || fields[i].has_key) {
        const std::size_t col = i < fields.size() ? fields[i].column : line.size() + 1;
        throw Error(ErrorCode::SyntaxError, std::string("expected ") + what, {lineno, col});
      }
      if (!valid_node_id(fields[i].value) && std::string_view(what).find("id") != std::string_view::npos) {
        throw Error(ErrorCode::SyntaxError, "invalid id '" + fields[i].value + "'",
                    {lineno, fields[i].column});
      }
      return fields[i];
    };
    auto read_attrs = [&](std::size_t from, auto&& on_attr) {
      for (std::size_t i = from; i < fields.size(); ++i) {
        if (!fields[i].has_key) {
          throw Error(ErrorCode::SyntaxError, "expected key=value, got '" + fields[i].value + "'",
                      {lineno, fields[i].column});
        }
        if (!text::valid_key(fields[i].key)) {
          throw Error(ErrorCode::SyntaxError, "invalid attribute key '" + fields[i].key + "'",
                      {lineno, fields[i].column});
        }
        on_attr(fields[i]);
      }
    };
    if (head.has_key) throw Error(ErrorCode::SyntaxError, "expected 'node' or 'edge'", {lineno, head.column});

    if (head.value == "node") {
      OpmNode n;
      n.pos = {lineno, head.column};
      n.id = positional(1, "node id").value;
      const auto& kind_field = positional(2, "node kind");
      auto kind = parse_opm_kind(kind_field.value);
      if (!kind) {
        throw Error(ErrorCode::UnknownKind, "unknown node kind '" + kind_field.value + "'",
                    {lineno, kind_field.column});
      }
      n.kind = *kind;
      read_attrs(3, [&](const text::Field& f) {
        if (!n.attributes.emplace(f.key, f.value).second) {
          throw Error(ErrorCode::SyntaxError, "duplicate attribute '" + f.key + "'", {lineno, f.column});
        }
      });
      if (g.find(n.id) != nullptr) {
        throw Error(ErrorCode::SyntaxError, "duplicate node id '" + n.id + "'", n.pos);
      }
      g.add_node(std::move(n));
    } else if (head.value == "edge") {
      OpmEdge e;
      e.pos = {lineno, head.column};
      e.from = positional(1, "source id").value;
      const auto& rel_field = positional(2, "relation");
      auto rel = parse_relation(rel_field.value);
      if (!rel || !is_opm_relation(*rel)) {
        throw Error(ErrorCode::UnknownRelation, "unknown relation '" + rel_field.value + "'",
                    {lineno, rel_field.column});
      }
      e.relation = *rel;
      e.to = positional(3, "target id").value;
      read_attrs(4, [&](const text::Field& f) {
        if (f.key == "t" || f.key == "source_t") {
          auto& slot = f.key == "t" ? e.time : e.source_time;
          if (slot) throw Error(ErrorCode::SyntaxError, "duplicate '" + f.key + "'", {lineno, f.column});
          slot = Timestamp{text::require_u64(f, lineno)};
        } else if (!e.attributes.emplace(f.key, f.value).second) {
          throw Error(ErrorCode::SyntaxError, "duplicate attribute '" + f.key + "'", {lineno, f.column});
        }
      });
      if (e.source_time && e.relation != Relation::WasDerivedFrom &&
          e.relation != Relation::WasTriggeredBy) {
        throw Error(ErrorCode::SyntaxError,
                    "source_t only applies to wasDerivedFrom and wasTriggeredBy", e.pos);
      }
      g.add_edge(std::move(e));
    } else {
      throw Error(ErrorCode::SyntaxError, "expected 'node' or 'edge', got '" + head.value + "'",
                  {lineno, head.column});
    }
  });
  return g;
}

inline OpmGraph parse_opm(std::istream& in) {
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_opm(std::string_view(data));
}

inline std::string serialize_opm(const OpmGraph& g) {
  std::string out;
  for (const auto& n : g.nodes()) {
    out += "node " + text::quote(n.id) + " " + std::string(to_string(n.kind));
    for (const auto& [k, v] : n.attributes) out += " " + k + "=" + text::quote(v);
    out += '\n';
  }
  for (const auto& e : g.edges()) {
    out += "edge " + text::quote(e.from) + " " + std::string(to_string(e.relation)) + " " +
           text::quote(e.to);
    if (e.time) out += " t=" + std::to_string(e.time->ticks);
    if (e.source_time) out += " source_t=" + std::to_string(e.source_time->ticks);
    for (const auto& [k, v] : e.attributes) out += " " + k + "=" + text::quote(v);
    out += '\n';
  }
  return out;
}

// --- time resolution ----------------------------------------------------------

enum class Severity { Error, Warning };

struct Issue {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  Position pos;
};

struct ValidationReport {
  std::vector<Issue> issues;

  bool empty() const { return issues.empty(); }
  bool has_errors() const {
    return std::any_of(issues.begin(), issues.end(),
                       [](const Issue& i) { return i.severity == Severity::Error; });
  }
  std::size_t count(Severity s) const {
    return static_cast<std::size_t>(std::count_if(
        issues.begin(), issues.end(), [s](const Issue& i) { return i.severity == s; }));
  }
  bool contains(std::string_view code) const {
    return std::any_of(issues.begin(), issues.end(), [&](const Issue& i) { return i.code == code; });
  }
};

inline std::string format_issue(const Issue& i) {
  std::string out = i.severity == Severity::Error ? "error" : "warning";
  if (i.pos.line != 0) out += " line " + std::to_string(i.pos.line);
  out += " [" + i.code + "] " + i.message;
  return out;
}

/// Instance-level reading of one OPM edge.
struct ResolvedEdge {
  std::size_t index = 0;  // position in OpmGraph::edges()
  std::string from_entity, to_entity;
  OpmKind from_kind = OpmKind::Artifact, to_kind = OpmKind::Artifact;
  Relation relation = Relation::Used;
  Timestamp from_time, to_time;
  bool synthesized = false;  // time came from the unannotated-edge rule
};

/// Interaction times for every OPM node, plus the instance-level edges.
/// Shared by validation and conversion so both read times identically.
struct Resolution {
  std::map<std::string, std::set<Timestamp>> times;  // entity -> instance times
  std::vector<ResolvedEdge> edges;
  std::vector<Issue> issues;
};

namespace detail {

inline std::string tick_text(Timestamp t) { return "t" + std::to_string(t.ticks); }

}  // namespace detail

inline Resolution resolve_times(const OpmGraph& g) {
  Resolution r;
  auto issue = [&](Severity s, std::string code, std::string msg, Position pos) {
    r.issues.push_back({s, std::move(code), std::move(msg), pos});
  };

  // Structural screen: keep edges whose endpoints exist with legal kinds.
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    const OpmEdge& e = g.edges()[i];
    const OpmNode* f = g.find(e.from);
    const OpmNode* t = g.find(e.to);
    if (f == nullptr || t == nullptr) {
      issue(Severity::Error, "DanglingEndpoint",
            "edge " + e.from + " " + std::string(to_string(e.relation)) + " " + e.to +
                " names missing node '" + (f == nullptr ? e.from : e.to) + "'",
            e.pos);
      continue;
    }
    if (!legal_opm_edge(f->kind, e.relation, t->kind)) {
      issue(Severity::Error, "IllegalRelation",
            std::string(to_string(f->kind)) + " " + std::string(to_string(e.relation)) + " " +
                std::string(to_string(t->kind)) + " is not a legal OPM edge (" + e.from + " -> " +
                e.to + ")",
            e.pos);
      continue;
    }
    if (e.from == e.to) {
      issue(Severity::Error, "IllegalRelation", "self-loop on " + e.from, e.pos);
      continue;
    }
    usable.push_back(i);
  }

  // Process times: annotated interactions, plus explicit trigger source times.
  std::map<std::string, std::set<Timestamp>> process_times;
  auto process_of = [&](const OpmEdge& e) -> const std::string& {
    return e.relation == Relation::WasGeneratedBy ? e.to : e.from;
  };
  for (std::size_t i : usable) {
    const OpmEdge& e = g.edges()[i];
    if (e.relation == Relation::WasDerivedFrom) continue;
    if (e.time) process_times[process_of(e)].insert(*e.time);
    if (e.relation == Relation::WasTriggeredBy && e.source_time) {
      process_times[e.to].insert(*e.source_time);
    }
  }
  auto earliest = [&](const std::string& process) -> Timestamp {
    auto it = process_times.find(process);
    return it == process_times.end() || it->second.empty() ? Timestamp{} : *it->second.begin();
  };
  std::set<std::string> warned_process;
  for (std::size_t i : usable) {
    const OpmEdge& e = g.edges()[i];
    if (e.relation == Relation::WasDerivedFrom || e.time) continue;
    const std::string& p = process_of(e);
    if (process_times[p].empty() && warned_process.insert(p).second) {
      issue(Severity::Warning, "UnannotatedProcess",
            "process " + p + " has no time annotations; its events are placed at t0", e.pos);
    }
  }
  for (std::size_t i : usable) {
    const OpmEdge& e = g.edges()[i];
    if (e.relation == Relation::WasDerivedFrom || e.time) continue;
    issue(Severity::Warning, "UnannotatedEdge",
          e.from + " " + std::string(to_string(e.relation)) + " " + e.to + " has no time; using " +
              detail::tick_text(earliest(process_of(e))),
          e.pos);
  }
  for (std::size_t i : usable) {
    const OpmEdge& e = g.edges()[i];
    if (e.relation == Relation::WasDerivedFrom || e.time) continue;
    process_times[process_of(e)].insert(earliest(process_of(e)));
  }

  // Artifact and agent times that do not depend on derivation sources.
  std::map<std::string, std::set<Timestamp>> base;
  for (std::size_t i : usable) {
    const OpmEdge& e = g.edges()[i];
    const Timestamp t = e.time.value_or(earliest(process_of(e)));
    switch (e.relation) {
      case Relation::Used: base[e.to].insert(t); break;
      case Relation::WasGeneratedBy: base[e.from].insert(t); break;
      case Relation::WasControlledBy: base[e.to].insert(t); break;
      default: break;
    }
  }
  // Derived side of wasDerivedFrom. Unannotated: earliest artifact time.
  std::map<std::size_t, Timestamp> derived_time;
  for (std::size_t i : usable) {
    const OpmEdge& e = g.edges()[i];
    if (e.relation != Relation::WasDerivedFrom) continue;
    if (e.time) {
      derived_time[i] = *e.time;
    } else if (auto it = base.find(e.from); it != base.end() && !it->second.empty()) {
      derived_time[i] = *it->second.begin();
      issue(Severity::Warning, "UnannotatedEdge",
            e.from + " wasDerivedFrom " + e.to + " has no time; using " +
                detail::tick_text(derived_time[i]),
            e.pos);
    } else {
      issue(Severity::Error, "TemporalInconsistency",
            e.from + " wasDerivedFrom " + e.to + " has no time and " + e.from +
                " has no other interaction to borrow one from",
            e.pos);
    }
  }
  for (const auto& [i, t] : derived_time) {
    const OpmEdge& e = g.edges()[i];
    base[e.from].insert(t);
    if (e.source_time) base[e.to].insert(*e.source_time);
  }

  // Instance-level edges.
  for (std::size_t i : usable) {
    const OpmEdge& e = g.edges()[i];
    ResolvedEdge re;
    re.index = i;
    re.from_entity = e.from;
    re.to_entity = e.to;
    re.from_kind = g.find(e.from)->kind;
    re.to_kind = g.find(e.to)->kind;
    re.relation = e.relation;
    switch (e.relation) {
      case Relation::Used:
      case Relation::WasGeneratedBy:
      case Relation::WasControlledBy: {
        re.synthesized = !e.time;
        re.from_time = re.to_time = e.time.value_or(earliest(process_of(e)));
        break;
      }
      case Relation::WasDerivedFrom: {
        auto dt = derived_time.find(i);
        if (dt == derived_time.end()) continue;
        re.from_time = dt->second;
        re.synthesized = !e.time;
        if (e.source_time) {
          re.to_time = *e.source_time;
          if (!(re.from_time > re.to_time)) {
            issue(Severity::Error, "TemporalInconsistency",
                  e.from + " wasDerivedFrom " + e.to + ": derived time " +
                      detail::tick_text(re.from_time) + " must be later than source time " +
                      detail::tick_text(re.to_time),
                  e.pos);
            continue;
          }
        } else {
          const auto& src = base[e.to];
          auto it = src.lower_bound(re.from_time);
          if (it == src.begin()) {
            issue(Severity::Error, "TemporalInconsistency",
                  e.from + " wasDerivedFrom " + e.to + " at " + detail::tick_text(re.from_time) +
                      ": " + e.to + " has no instance strictly earlier",
                  e.pos);
            continue;
          }
          re.to_time = *std::prev(it);
        }
        break;
      }
      case Relation::WasTriggeredBy: {
        re.synthesized = !e.time;
        re.from_time = e.time.value_or(earliest(e.from));
        if (e.source_time) {
          re.to_time = *e.source_time;
          if (!(re.from_time > re.to_time)) {
            issue(Severity::Error, "TemporalInconsistency",
                  e.from + " wasTriggeredBy " + e.to + ": trigger time " +
                      detail::tick_text(re.to_time) + " is not before " +
                      detail::tick_text(re.from_time),
                  e.pos);
            continue;
          }
        } else {
          const auto& src = process_times[e.to];
          auto it = src.lower_bound(re.from_time);
          if (it == src.begin()) {
            issue(Severity::Error, "UnresolvedTrigger",
                  e.from + " wasTriggeredBy " + e.to + " at " + detail::tick_text(re.from_time) +
                      ": " + e.to + " has no event strictly earlier",
                  e.pos);
            continue;
          }
          re.to_time = *std::prev(it);
        }
        break;
      }
      default:
        continue;
    }
    r.edges.push_back(std::move(re));
  }

  r.times = std::move(base);
  for (auto& [p, ts] : process_times) r.times[p].insert(ts.begin(), ts.end());
  return r;
}

/// Label of the folder a process's events are grouped into.
inline std::string folder_label(const OpmNode& process) {
  auto it = process.attributes.find("process_instance");
  return it == process.attributes.end() ? process.id : it->second;
}

/// Folder type used for startedBefore chaining.
inline std::string folder_type(const OpmNode& process) {
  auto it = process.attributes.find("process_type");
  return it == process.attributes.end() ? folder_label(process) : it->second;
}

namespace detail {

/// Whether the directed graph given as adjacency lists has a cycle.
template <typename Key>
bool has_cycle(const std::map<Key, std::vector<Key>>& adj) {
  std::map<Key, int> color;  // 0 white, 1 grey, 2 black
  for (const auto& [start, _] : adj) {
    if (color[start] != 0) continue;
    std::vector<std::pair<Key, std::size_t>> stack{{start, 0}};
    color[start] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      auto it = adj.find(node);
      if (it == adj.end() || next >= it->second.size()) {
        color[node] = 2;
        stack.pop_back();
        continue;
      }
      const Key child = it->second[next++];
      const int c = color[child];
      if (c == 1) return true;
      if (c == 0) {
        color[child] = 1;
        stack.emplace_back(child, 0);
      }
    }
  }
  return false;
}

}  // namespace detail

/// Reports every rule the conversion relies on. Errors block conversion;
/// warnings describe synthesized or suspicious content.
inline ValidationReport validate_opm(const OpmGraph& g) {
  ValidationReport report;
  Resolution r = resolve_times(g);
  report.issues = std::move(r.issues);
  auto issue = [&](Severity s, std::string code, std::string msg, Position pos) {
    report.issues.push_back({s, std::move(code), std::move(msg), pos});
  };

  // Distinct OPM edges must map to distinct TPM edges.
  std::map<std::string, std::size_t> seen;
  for (const auto& re : r.edges) {
    const auto key = edge_key(instance_id(re.from_entity, re.from_time), re.relation,
                              instance_id(re.to_entity, re.to_time));
    auto [it, fresh] = seen.emplace(key, re.index);
    if (!fresh) {
      issue(Severity::Error, "DuplicateEdge",
            "edge duplicates line " + std::to_string(g.edges()[it->second].pos.line) + " (" + key + ")",
            g.edges()[re.index].pos);
    }
  }

  // One agent controlling two processes at one instant.
  std::map<std::pair<std::string, Timestamp>, std::string> control;
  for (const auto& re : r.edges) {
    if (re.relation != Relation::WasControlledBy) continue;
    auto [it, fresh] = control.emplace(std::make_pair(re.to_entity, re.to_time), re.from_entity);
    if (!fresh && it->second != re.from_entity) {
      issue(Severity::Error, "AgentTie",
            "agent " + re.to_entity + " controls both " + it->second + " and " + re.from_entity +
                " at " + detail::tick_text(re.to_time),
            g.edges()[re.index].pos);
    }
  }

  // Events grouped into one folder must have distinct times, and folders of
  // one type must have distinct starts.
  std::map<std::string, std::map<Timestamp, std::string>> folder_events;
  std::map<std::string, std::string> folder_of_type;  // label -> type
  for (const auto& n : g.nodes()) {
    if (n.kind != OpmKind::Process) continue;
    auto it = r.times.find(n.id);
    if (it == r.times.end()) continue;
    const std::string label = folder_label(n);
    const std::string type = folder_type(n);
    auto [ft, fresh_folder] = folder_of_type.emplace(label, type);
    if (!fresh_folder && ft->second != type) {
      issue(Severity::Error, "FolderTypeConflict",
            "folder " + label + " mixes process types " + ft->second + " and " + type, n.pos);
    }
    for (Timestamp t : it->second) {
      auto [ev, fresh] = folder_events[label].emplace(t, n.id);
      if (!fresh) {
        issue(Severity::Error, "EventTie",
              "processes " + ev->second + " and " + n.id + " both have an event at " +
                  detail::tick_text(t) + " in folder " + label,
              n.pos);
      }
    }
  }
  std::map<std::string, std::map<Timestamp, std::string>> starts_by_type;
  for (const auto& [label, events] : folder_events) {
    if (events.empty()) continue;
    const Timestamp start = events.begin()->first;
    auto [it, fresh] = starts_by_type[folder_of_type[label]].emplace(start, label);
    if (!fresh) {
      issue(Severity::Error, "FolderTie",
            "folders " + it->second + " and " + label + " of type " + folder_of_type[label] +
                " both start at " + detail::tick_text(start),
            {});
    }
  }

  // Generated node ids must not collide.
  std::map<std::string, std::string> ids;
  for (const auto& [entity, ts] : r.times)
    for (Timestamp t : ts) ids.emplace(instance_id(entity, t), entity);
  for (const auto& [label, _] : folder_events) {
    if (!ids.emplace(label, label).second) {
      issue(Severity::Error, "IdCollision", "folder label " + label + " collides with an instance id",
            {});
    }
  }

  // Cycles: entity-level cycles are fine when the timed reading breaks them.
  std::map<std::string, std::vector<std::string>> entity_adj, instance_adj;
  for (const auto& re : r.edges) {
    if (!is_causal(re.relation)) continue;
    entity_adj[re.from_entity].push_back(re.to_entity);
    instance_adj[instance_id(re.from_entity, re.from_time)].push_back(
        instance_id(re.to_entity, re.to_time));
  }
  if (detail::has_cycle(instance_adj)) {
    issue(Severity::Error, "CausalityCycle", "causal edges form a cycle between timed instances", {});
  } else if (detail::has_cycle(entity_adj)) {
    issue(Severity::Warning, "OpmCycle",
          "the untimed OPM graph has a causal cycle; time annotations resolve it", {});
  }

  return report;
}

}  // namespace tpm
