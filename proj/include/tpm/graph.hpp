#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/model.hpp"

namespace tpm {

/// Whether (from kind, relation, to kind) is a legal TPM edge shape.
constexpr bool legal_edge(NodeKind from, Relation rel, NodeKind to) {
  switch (rel) {
    case Relation::Used:
      return from == NodeKind::Event && to == NodeKind::ArtifactInstance;
    case Relation::WasGeneratedBy:
      return from == NodeKind::ArtifactInstance && to == NodeKind::Event;
    case Relation::WasTriggeredBy:
      return from == NodeKind::Event && to == NodeKind::Event;
    case Relation::WasDerivedFrom:
      return from == NodeKind::ArtifactInstance && to == NodeKind::ArtifactInstance;
    case Relation::WasControlledBy:
      return from == NodeKind::Event && to == NodeKind::AgentInstance;
    case Relation::HappenedBefore:
      return from == to && (from == NodeKind::Event || from == NodeKind::ArtifactInstance ||
                            from == NodeKind::AgentInstance);
    case Relation::StartedBefore:
      return from == to && is_container(from);
    case Relation::IsPartOf:
      return is_container(to);
  }
  return false;
}

/// Directed temporal provenance graph.
///
/// Artifact and agent instances of one entity are kept on a single
/// happenedBefore chain: inserting an instance links it to its chronological
/// neighbours (splitting the edge between them if needed), and removing one
/// re-links the survivors. Nodes and edges are addressed by stable slots so
/// the evaluator can iterate without allocating; removed slots read as null.
///
/// Not internally synchronized: one writer at a time, any number of readers.
class TpmGraph {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::string add_node(NodeRecord node) {
    normalize_and_check(node);
    if (node_index_.count(node.node_id) != 0) {
      throw Error(ErrorCode::DuplicateNodeId, "node '" + node.node_id + "' already exists");
    }
    const bool chained =
        node.kind == NodeKind::ArtifactInstance || node.kind == NodeKind::AgentInstance;
    std::optional<std::size_t> pred, succ;
    if (node.timestamp) {
      auto kind_it = entity_kind_.find(node.entity_id);
      if (kind_it != entity_kind_.end() && kind_it->second != node.kind) {
        throw Error(ErrorCode::MalformedNode,
                    "entity '" + node.entity_id + "' already holds " +
                        std::string(to_string(kind_it->second)) + " nodes");
      }
      const auto& chain = entity_instances_[node.entity_id];
      if (chain.count(*node.timestamp) != 0) {
        throw Error(ErrorCode::MalformedNode,
                    "entity '" + node.entity_id + "' already has an instance at tick " +
                        std::to_string(node.timestamp->ticks));
      }
      if (chained) {
        auto it = chain.lower_bound(*node.timestamp);
        if (it != chain.end()) succ = it->second;
        if (it != chain.begin()) pred = std::prev(it)->second;
      }
    }

    std::string id = node.node_id;
    const std::size_t slot = insert_raw_node(std::move(node));

    if (chained) {
      if (pred && succ) {
        const auto key = edge_key(nodes_[*pred]->node_id, Relation::HappenedBefore,
                                  nodes_[*succ]->node_id);
        if (auto it = edge_index_.find(key); it != edge_index_.end()) erase_edge_slot(it->second);
      }
      if (pred) link_chain(*pred, slot);
      if (succ) link_chain(slot, *succ);
    }
    return id;
  }

  /// Stores a validated edge. Returns false when an identical edge exists.
  bool add_edge(EdgeRecord edge) {
    const std::size_t from_slot = slot_of(edge.from);
    const std::size_t to_slot = slot_of(edge.to);
    if (from_slot == npos || to_slot == npos) {
      throw Error(ErrorCode::UnknownEndpoint, "edge " + edge_key(edge) + " names a missing node");
    }
    const NodeRecord& from = *nodes_[from_slot];
    const NodeRecord& to = *nodes_[to_slot];
    if (!legal_edge(from.kind, edge.relation, to.kind) || from_slot == to_slot) {
      throw Error(ErrorCode::IllegalRelation,
                  std::string(to_string(from.kind)) + " -" + std::string(to_string(edge.relation)) +
                      "-> " + std::string(to_string(to.kind)) + " is not a legal edge (" +
                      edge_key(edge) + ")");
    }
    if (edge.weight && !is_weighted(edge.relation)) {
      throw Error(ErrorCode::IllegalRelation,
                  std::string(to_string(edge.relation)) + " edges carry no weight");
    }
    if (edge_index_.count(edge_key(edge)) != 0) {
      const EdgeRecord& existing = *edges_[edge_index_.at(edge_key(edge))];
      if (edge.weight && existing.weight != edge.weight) {
        throw Error(ErrorCode::TemporalViolation, "weight mismatch on " + edge_key(edge));
      }
      return false;
    }
    if (is_causal(edge.relation) && reaches_causally(to_slot, from_slot)) {
      throw Error(ErrorCode::CycleIntroduced, edge_key(edge) + " closes a causality cycle");
    }
    check_temporal(from, to, edge);
    insert_raw_edge(std::move(edge));
    return true;
  }

  /// Removes a node and its incident edges; entity chains are re-linked.
  void remove_node(const std::string& id) {
    const std::size_t slot = slot_of(id);
    if (slot == npos) throw Error(ErrorCode::UnknownEndpoint, "no node '" + id + "'");
    const NodeRecord node = *nodes_[slot];
    for (std::size_t e : std::vector<std::size_t>(out_[slot])) erase_edge_slot(e);
    for (std::size_t e : std::vector<std::size_t>(in_[slot])) erase_edge_slot(e);
    std::optional<std::size_t> pred, succ;
    if (node.timestamp) {
      auto& chain = entity_instances_[node.entity_id];
      auto it = chain.find(*node.timestamp);
      if (it != chain.begin()) pred = std::prev(it)->second;
      if (std::next(it) != chain.end()) succ = std::next(it)->second;
      chain.erase(it);
      if (chain.empty()) {
        entity_instances_.erase(node.entity_id);
        entity_kind_.erase(node.entity_id);
      }
    }
    nodes_[slot].reset();
    node_index_.erase(id);
    --live_nodes_;
    if ((node.kind == NodeKind::ArtifactInstance || node.kind == NodeKind::AgentInstance) &&
        pred && succ) {
      link_chain(*pred, *succ);
    }
  }

  bool remove_edge(const std::string& key) {
    auto it = edge_index_.find(key);
    if (it == edge_index_.end()) return false;
    erase_edge_slot(it->second);
    return true;
  }

  void set_attribute(const std::string& id, const std::string& key, const std::string& value) {
    mutable_node(id).attributes[key] = value;
  }

  /// Moves a container's window. Existing isPartOf edges must still fit.
  void set_container_window(const std::string& id, Timestamp start, std::uint64_t duration) {
    NodeRecord& n = mutable_node(id);
    if (!is_container(n.kind)) throw Error(ErrorCode::NotAContainer, id + " is not a container");
    const Timestamp end{start.ticks + duration};
    for (std::size_t e : in_[slot_of(id)]) {
      if (edges_[e]->relation != Relation::IsPartOf) continue;
      const NodeRecord& m = *nodes_[slot_of(edges_[e]->from)];
      if (m.time() < start || m.end_time() > end) {
        throw Error(ErrorCode::TemporalViolation,
                    "member " + m.node_id + " would fall outside " + id + "'s window");
      }
    }
    n.start = start;
    n.duration = duration;
  }

  void set_timed(const std::string& id, bool timed) {
    NodeRecord& n = mutable_node(id);
    if (!is_container(n.kind)) throw Error(ErrorCode::NotAContainer, id + " is not a container");
    n.timed = timed;
  }

  // --- lookup -------------------------------------------------------------

  std::size_t slot_of(const std::string& id) const {
    auto it = node_index_.find(id);
    return it == node_index_.end() ? npos : it->second;
  }
  bool contains(const std::string& id) const { return node_index_.count(id) != 0; }
  const NodeRecord* find(const std::string& id) const {
    const std::size_t s = slot_of(id);
    return s == npos ? nullptr : &*nodes_[s];
  }
  const NodeRecord& node(const std::string& id) const {
    const NodeRecord* n = find(id);
    if (n == nullptr) throw Error(ErrorCode::UnknownEndpoint, "no node '" + id + "'");
    return *n;
  }
  const EdgeRecord* find_edge(const std::string& key) const {
    auto it = edge_index_.find(key);
    return it == edge_index_.end() ? nullptr : &*edges_[it->second];
  }
  bool contains_edge(const std::string& key) const { return edge_index_.count(key) != 0; }

  std::size_t node_slot_count() const { return nodes_.size(); }
  std::size_t edge_slot_count() const { return edges_.size(); }
  const NodeRecord* node_at(std::size_t slot) const {
    return nodes_[slot] ? &*nodes_[slot] : nullptr;
  }
  const EdgeRecord* edge_at(std::size_t slot) const {
    return edges_[slot] ? &*edges_[slot] : nullptr;
  }
  const std::vector<std::size_t>& out_slots(std::size_t node_slot) const { return out_[node_slot]; }
  const std::vector<std::size_t>& in_slots(std::size_t node_slot) const { return in_[node_slot]; }
  std::size_t edge_source_slot(std::size_t edge_slot) const { return edge_from_[edge_slot]; }
  std::size_t edge_target_slot(std::size_t edge_slot) const { return edge_to_[edge_slot]; }

  std::size_t node_count() const { return live_nodes_; }
  std::size_t edge_count() const { return live_edges_; }
  bool empty() const { return live_nodes_ == 0; }

  /// Live nodes in insertion order.
  std::vector<const NodeRecord*> nodes() const {
    std::vector<const NodeRecord*> out;
    out.reserve(live_nodes_);
    for (const auto& n : nodes_)
      if (n) out.push_back(&*n);
    return out;
  }
  /// Live edges in insertion order.
  std::vector<const EdgeRecord*> edges() const {
    std::vector<const EdgeRecord*> out;
    out.reserve(live_edges_);
    for (const auto& e : edges_)
      if (e) out.push_back(&*e);
    return out;
  }
  std::vector<const EdgeRecord*> out_edges(const std::string& id) const {
    return collect(out_, id);
  }
  std::vector<const EdgeRecord*> in_edges(const std::string& id) const {
    return collect(in_, id);
  }

  /// Latest instant covered by any node (0 for an empty graph).
  Timestamp max_time() const {
    Timestamp best{};
    for (const auto& n : nodes_)
      if (n) best = std::max(best, n->end_time());
    return best;
  }

  // --- temporal access ----------------------------------------------------

  /// Point-time nodes of one entity, oldest first.
  std::vector<NodeRecord> instances_of(const std::string& entity) const {
    std::vector<NodeRecord> out;
    auto it = entity_instances_.find(entity);
    if (it == entity_instances_.end()) return out;
    for (const auto& [t, slot] : it->second) out.push_back(*nodes_[slot]);
    return out;
  }

  /// Subgraph of nodes living in [tau1, tau2]; containers are kept when
  /// their interval intersects it. Edges survive when both endpoints do.
  TpmGraph window(Timestamp tau1, Timestamp tau2) const {
    if (tau1 > tau2) {
      throw Error(ErrorCode::InvalidInterval, "window start " + std::to_string(tau1.ticks) +
                                                  " is after end " + std::to_string(tau2.ticks));
    }
    std::unordered_set<std::string> keep;
    for (const auto& n : nodes_) {
      if (!n) continue;
      if (n->time() <= tau2 && n->end_time() >= tau1) keep.insert(n->node_id);
    }
    return subgraph(keep);
  }

  /// Induced subgraph over `ids`, copied verbatim (no re-validation).
  TpmGraph subgraph(const std::unordered_set<std::string>& ids) const {
    TpmGraph out;
    for (const auto& n : nodes_)
      if (n && ids.count(n->node_id) != 0) out.insert_raw_node(*n);
    for (const auto& e : edges_)
      if (e && ids.count(e->from) != 0 && ids.count(e->to) != 0) out.insert_raw_edge(*e);
    return out;
  }

  /// Graph holding exactly the listed nodes and edges, copied verbatim.
  /// Edge endpoints must be among the nodes.
  TpmGraph restrict_to(const std::vector<std::string>& node_ids,
                       const std::vector<std::string>& edge_keys) const {
    TpmGraph out;
    std::unordered_set<std::string> seen;
    for (const auto& id : node_ids) {
      if (!seen.insert(id).second) continue;
      out.insert_raw_node(node(id));
    }
    for (const auto& k : edge_keys) {
      const EdgeRecord* e = find_edge(k);
      if (e != nullptr && !out.contains_edge(k)) out.insert_raw_edge(*e);
    }
    return out;
  }

  /// Sources of isPartOf edges into `container`, in edge insertion order.
  std::vector<std::string> members_of(const std::string& container) const {
    const std::size_t slot = slot_of(container);
    if (slot == npos) throw Error(ErrorCode::UnknownEndpoint, "no node '" + container + "'");
    std::vector<std::string> out;
    for (std::size_t e : in_[slot])
      if (edges_[e]->relation == Relation::IsPartOf) out.push_back(edges_[e]->from);
    return out;
  }

  /// Causal dependencies a folder/path node inherits from its members.
  /// Derived on demand; never stored.
  std::vector<EdgeRecord> inherited_causal_edges(const std::string& container) const {
    const NodeRecord& c = node(container);
    if (!is_container(c.kind)) {
      throw Error(ErrorCode::NotAContainer, container + " is not a folder or path node");
    }
    const Timestamp ts = *c.start;
    const Timestamp te = c.end_time();
    auto within = [&](Timestamp t) { return ts <= t && t <= te; };

    std::set<std::string> members;
    for (const auto& m : members_of(container)) members.insert(m);

    std::map<std::string, EdgeRecord> out;  // keyed for collapse + stable order
    auto emit = [&](EdgeRecord e) { out.emplace(edge_key(e), std::move(e)); };
    for (const auto& m : members) {
      const std::size_t ms = slot_of(m);
      for (std::size_t es : out_[ms]) {
        const EdgeRecord& e = *edges_[es];
        if (members.count(e.to) != 0) continue;
        const NodeRecord& other = *nodes_[edge_to_[es]];
        switch (e.relation) {
          case Relation::Used:
            if (within(other.time())) emit({container, e.to, Relation::Used, std::nullopt});
            break;
          case Relation::WasTriggeredBy:
            if (other.time() < ts) emit({container, e.to, Relation::WasTriggeredBy, std::nullopt});
            break;
          case Relation::WasControlledBy:
            if (within(other.time())) emit({container, e.to, Relation::WasControlledBy, std::nullopt});
            break;
          default:
            break;
        }
      }
      for (std::size_t es : in_[ms]) {
        const EdgeRecord& e = *edges_[es];
        if (e.relation != Relation::WasGeneratedBy || members.count(e.from) != 0) continue;
        if (within(nodes_[edge_from_[es]]->time())) {
          emit({e.from, container, Relation::WasGeneratedBy, std::nullopt});
        }
      }
    }
    std::vector<EdgeRecord> result;
    result.reserve(out.size());
    for (auto& [k, e] : out) result.push_back(std::move(e));
    return result;
  }

  /// Equal node and edge sets, ignoring insertion order.
  friend bool canonically_equal(const TpmGraph& a, const TpmGraph& b) {
    if (a.node_count() != b.node_count() || a.edge_count() != b.edge_count()) return false;
    for (const auto& n : a.nodes_) {
      if (!n) continue;
      const NodeRecord* other = b.find(n->node_id);
      if (other == nullptr || !(*other == *n)) return false;
    }
    for (const auto& e : a.edges_) {
      if (!e) continue;
      const EdgeRecord* other = b.find_edge(edge_key(*e));
      if (other == nullptr || !(*other == *e)) return false;
    }
    return true;
  }

  /// Copies every node and edge of `other` through the validating path.
  void merge(const TpmGraph& other) {
    for (const NodeRecord* n : other.nodes())
      if (!contains(n->node_id)) add_node(*n);
    for (const EdgeRecord* e : other.edges()) add_edge(*e);
  }

 private:
  static std::uint64_t signed_gap(Timestamp from, Timestamp to) { return to - from; }

  NodeRecord& mutable_node(const std::string& id) {
    const std::size_t s = slot_of(id);
    if (s == npos) throw Error(ErrorCode::UnknownEndpoint, "no node '" + id + "'");
    return *nodes_[s];
  }

  static void normalize_and_check(NodeRecord& node) {
    if (node.entity_id.empty()) {
      throw Error(ErrorCode::MalformedNode, "node '" + node.node_id + "' has no entity id");
    }
    if (is_container(node.kind)) {
      if (node.timestamp || !node.start || !node.duration) {
        throw Error(ErrorCode::MalformedNode,
                    "folder/path node '" + node.entity_id + "' needs (start, duration) and no timestamp");
      }
      if (node.node_id.empty()) node.node_id = node.entity_id;
    } else {
      if (!node.timestamp || node.start || node.duration) {
        throw Error(ErrorCode::MalformedNode,
                    std::string(to_string(node.kind)) + " '" + node.entity_id +
                        "' needs exactly one timestamp and no duration");
      }
      if (node.timed) {
        throw Error(ErrorCode::MalformedNode, "only folder/path nodes can be timed");
      }
      if (node.node_id.empty()) node.node_id = instance_id(node.entity_id, *node.timestamp);
    }
    if (!valid_node_id(node.node_id)) {
      throw Error(ErrorCode::MalformedNode, "invalid node id '" + node.node_id + "'");
    }
  }

  void check_temporal(const NodeRecord& from, const NodeRecord& to, EdgeRecord& edge) const {
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::TemporalViolation, edge_key(edge) + ": " + why);
    };
    switch (edge.relation) {
      case Relation::Used:
      case Relation::WasGeneratedBy:
      case Relation::WasControlledBy:
        if (from.time() != to.time()) fail("endpoints must share one timestamp");
        break;
      case Relation::WasTriggeredBy:
      case Relation::WasDerivedFrom:
        if (!(from.time() > to.time())) fail("source must be strictly later than target");
        break;
      case Relation::HappenedBefore: {
        if (!(from.time() < to.time())) fail("source must be strictly earlier than target");
        if (from.kind != NodeKind::Event) {
          if (from.entity_id != to.entity_id) {
            throw Error(ErrorCode::IllegalRelation,
                        "happenedBefore between instances of different entities");
          }
          // Consecutive instances are already linked by add_node, so any
          // other pair skips an instance.
          fail("instances are not consecutive");
        }
        const std::uint64_t w = signed_gap(from.time(), to.time());
        if (edge.weight && *edge.weight != w) fail("weight must be " + std::to_string(w));
        edge.weight = w;
        break;
      }
      case Relation::StartedBefore: {
        if (!(from.time() < to.time())) fail("source must start strictly earlier than target");
        const std::uint64_t w = signed_gap(from.time(), to.time());
        if (edge.weight && *edge.weight != w) fail("weight must be " + std::to_string(w));
        edge.weight = w;
        break;
      }
      case Relation::IsPartOf:
        if (from.time() < to.time() || from.end_time() > to.end_time()) {
          fail("member lies outside the container window");
        }
        break;
    }
  }

  /// Whether `target` is reachable from `source` over causal edges. Stored
  /// causal edges never point forward in time, so nodes earlier than the
  /// target are pruned.
  bool reaches_causally(std::size_t source, std::size_t target) const {
    if (source == target) return true;
    const Timestamp floor = nodes_[target]->time();
    if (nodes_[source]->time() < floor) return false;
    std::vector<std::size_t> stack{source};
    std::unordered_set<std::size_t> seen{source};
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      for (std::size_t e : out_[cur]) {
        if (!is_causal(edges_[e]->relation)) continue;
        const std::size_t next = edge_to_[e];
        if (next == target) return true;
        if (nodes_[next]->time() < floor || !seen.insert(next).second) continue;
        stack.push_back(next);
      }
    }
    return false;
  }

  void link_chain(std::size_t from, std::size_t to) {
    EdgeRecord e{nodes_[from]->node_id, nodes_[to]->node_id, Relation::HappenedBefore,
                 signed_gap(nodes_[from]->time(), nodes_[to]->time())};
    insert_raw_edge(std::move(e));
  }

  std::size_t insert_raw_node(NodeRecord node) {
    const std::size_t slot = nodes_.size();
    node_index_.emplace(node.node_id, slot);
    if (node.timestamp) {
      entity_instances_[node.entity_id].emplace(*node.timestamp, slot);
      entity_kind_.emplace(node.entity_id, node.kind);
    }
    nodes_.emplace_back(std::move(node));
    out_.emplace_back();
    in_.emplace_back();
    ++live_nodes_;
    return slot;
  }

  void insert_raw_edge(EdgeRecord edge) {
    const std::size_t slot = edges_.size();
    const std::size_t f = slot_of(edge.from);
    const std::size_t t = slot_of(edge.to);
    edge_index_.emplace(edge_key(edge), slot);
    out_[f].push_back(slot);
    in_[t].push_back(slot);
    edge_from_.push_back(f);
    edge_to_.push_back(t);
    edges_.emplace_back(std::move(edge));
    ++live_edges_;
  }

  void erase_edge_slot(std::size_t slot) {
    auto drop = [slot](std::vector<std::size_t>& v) { v.erase(std::find(v.begin(), v.end(), slot)); };
    drop(out_[edge_from_[slot]]);
    drop(in_[edge_to_[slot]]);
    edge_index_.erase(edge_key(*edges_[slot]));
    edges_[slot].reset();
    --live_edges_;
  }

  std::vector<const EdgeRecord*> collect(const std::vector<std::vector<std::size_t>>& adj,
                                         const std::string& id) const {
    const std::size_t s = slot_of(id);
    if (s == npos) throw Error(ErrorCode::UnknownEndpoint, "no node '" + id + "'");
    std::vector<const EdgeRecord*> out;
    for (std::size_t e : adj[s]) out.push_back(&*edges_[e]);
    return out;
  }

  std::vector<std::optional<NodeRecord>> nodes_;
  std::unordered_map<std::string, std::size_t> node_index_;
  std::vector<std::vector<std::size_t>> out_, in_;
  std::vector<std::optional<EdgeRecord>> edges_;
  std::vector<std::size_t> edge_from_, edge_to_;
  std::unordered_map<std::string, std::size_t> edge_index_;
  std::unordered_map<std::string, std::map<Timestamp, std::size_t>> entity_instances_;
  std::unordered_map<std::string, NodeKind> entity_kind_;
  std::size_t live_nodes_ = 0;
  std::size_t live_edges_ = 0;
};

/// Full invariant scan: edge legality, temporal rules, chain law and
/// causality acyclicity. Returns one message per violation.
inline std::vector<std::string> check_invariants(const TpmGraph& g) {
  std::vector<std::string> problems;
  for (const EdgeRecord* e : g.edges()) {
    const NodeRecord& f = g.node(e->from);
    const NodeRecord& t = g.node(e->to);
    if (!legal_edge(f.kind, e->relation, t.kind)) problems.push_back("illegal edge " + edge_key(*e));
    switch (e->relation) {
      case Relation::Used:
      case Relation::WasGeneratedBy:
      case Relation::WasControlledBy:
        if (f.time() != t.time()) problems.push_back("timestamp mismatch on " + edge_key(*e));
        break;
      case Relation::WasTriggeredBy:
      case Relation::WasDerivedFrom:
        if (!(f.time() > t.time())) problems.push_back("time order on " + edge_key(*e));
        break;
      case Relation::HappenedBefore:
      case Relation::StartedBefore:
        if (!(f.time() < t.time()) || e->weight != (t.time() - f.time())) {
          problems.push_back("bad weight/order on " + edge_key(*e));
        }
        break;
      case Relation::IsPartOf:
        if (f.time() < t.time() || f.end_time() > t.end_time()) {
          problems.push_back("member outside window on " + edge_key(*e));
        }
        break;
    }
  }

  // Chain law: consecutive instances joined by exactly one weighted edge,
  // and no happenedBefore edge between non-consecutive instances.
  std::map<std::string, std::vector<const NodeRecord*>> chains;
  for (const NodeRecord* n : g.nodes()) {
    if (n->kind == NodeKind::ArtifactInstance || n->kind == NodeKind::AgentInstance) {
      chains[n->entity_id].push_back(n);
    }
  }
  for (auto& [entity, chain] : chains) {
    std::sort(chain.begin(), chain.end(),
              [](const NodeRecord* a, const NodeRecord* b) { return a->time() < b->time(); });
    std::size_t chain_edges = 0;
    for (const NodeRecord* n : chain)
      for (const EdgeRecord* e : g.out_edges(n->node_id))
        if (e->relation == Relation::HappenedBefore) ++chain_edges;
    if (chain_edges != chain.size() - 1) {
      problems.push_back("entity " + entity + " chain has " + std::to_string(chain_edges) +
                         " happenedBefore edges for " + std::to_string(chain.size()) + " instances");
    }
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      const auto key = edge_key(chain[i]->node_id, Relation::HappenedBefore, chain[i + 1]->node_id);
      if (!g.contains_edge(key)) problems.push_back("missing chain edge " + key);
    }
  }

  // Causality acyclicity via Kahn's algorithm on the causal subgraph.
  std::unordered_map<std::string, std::size_t> indegree;
  for (const NodeRecord* n : g.nodes()) indegree[n->node_id] = 0;
  for (const EdgeRecord* e : g.edges())
    if (is_causal(e->relation)) ++indegree[e->to];
  std::vector<std::string> ready;
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.push_back(id);
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::string cur = ready.back();
    ready.pop_back();
    ++visited;
    for (const EdgeRecord* e : g.out_edges(cur)) {
      if (is_causal(e->relation) && --indegree[e->to] == 0) ready.push_back(e->to);
    }
  }
  if (visited != g.node_count()) problems.push_back("causality subgraph has a cycle");
  return problems;
}

}  // namespace tpm
