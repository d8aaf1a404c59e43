#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/graph.hpp"
#include "tpm/model.hpp"
#include "tpm/opm.hpp"
#include "tpm/query/ast.hpp"
#include "tpm/query/eval.hpp"

namespace tpm::reach {

/// Plain directed multigraph with string ids and arc labels; the common
/// ground for TPM and OPM graphs.
class LabeledDigraph {
 public:
  struct Arc {
    std::size_t from = 0, to = 0;
    std::string label;
    std::string key;
  };

  std::size_t add_node(const std::string& id) {
    auto [it, fresh] = index_.emplace(id, ids_.size());
    if (fresh) {
      ids_.push_back(id);
      out_.emplace_back();
    }
    return it->second;
  }

  std::size_t add_arc(std::size_t from, std::size_t to, std::string label, std::string key = {}) {
    if (key.empty()) key = ids_[from] + " " + label + " " + ids_[to];
    arcs_.push_back({from, to, std::move(label), std::move(key)});
    out_[from].push_back(arcs_.size() - 1);
    return arcs_.size() - 1;
  }

  std::size_t node_count() const { return ids_.size(); }
  std::size_t arc_count() const { return arcs_.size(); }
  const std::string& id(std::size_t n) const { return ids_[n]; }
  const Arc& arc(std::size_t a) const { return arcs_[a]; }
  const std::vector<std::size_t>& out(std::size_t n) const { return out_[n]; }
  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? static_cast<std::size_t>(-1) : it->second;
  }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<std::size_t>> out_;
};

/// Live TPM nodes in slot order; arcs labeled by relation, keyed by edge key.
inline LabeledDigraph digraph_of(const TpmGraph& g) {
  LabeledDigraph d;
  for (std::size_t s = 0; s < g.node_slot_count(); ++s)
    if (const NodeRecord* n = g.node_at(s)) d.add_node(n->node_id);
  for (std::size_t e = 0; e < g.edge_slot_count(); ++e) {
    const EdgeRecord* r = g.edge_at(e);
    if (r == nullptr) continue;
    d.add_arc(d.index_of(r->from), d.index_of(r->to), std::string(to_string(r->relation)), edge_key(*r));
  }
  return d;
}

/// Entity-level OPM graph; parallel annotated edges collapse to one arc.
inline LabeledDigraph digraph_of(const OpmGraph& g) {
  LabeledDigraph d;
  for (const auto& n : g.nodes()) d.add_node(n.id);
  std::unordered_set<std::string> seen;
  for (const auto& e : g.edges()) {
    const std::size_t f = d.index_of(e.from), t = d.index_of(e.to);
    if (f == static_cast<std::size_t>(-1) || t == static_cast<std::size_t>(-1)) continue;
    const std::string key = edge_key(e.from, e.relation, e.to);
    if (seen.insert(key).second) d.add_arc(f, t, std::string(to_string(e.relation)), key);
  }
  return d;
}

using NodePredicate = std::function<bool(std::size_t)>;
using ArcPredicate = std::function<bool(std::size_t)>;

struct Walk {
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> arcs;

  bool operator==(const Walk&) const = default;
};

/// Ordering by length, then node id sequence.
inline void sort_walks(const LabeledDigraph& g, std::vector<Walk>& walks) {
  std::sort(walks.begin(), walks.end(), [&](const Walk& a, const Walk& b) {
    if (a.arcs.size() != b.arcs.size()) return a.arcs.size() < b.arcs.size();
    for (std::size_t i = 0; i < a.nodes.size(); ++i)
      if (a.nodes[i] != b.nodes[i]) return g.id(a.nodes[i]) < g.id(b.nodes[i]);
    for (std::size_t i = 0; i < a.arcs.size(); ++i)
      if (a.arcs[i] != b.arcs[i]) return g.arc(a.arcs[i]).key < g.arc(b.arcs[i]).key;
    return false;
  });
}

/// All simple paths with 1..max_len arcs from a start node to an end node
/// over admitted arcs.
inline std::vector<Walk> traverse_paths(const LabeledDigraph& g, const NodePredicate& start,
                                        const NodePredicate& end, const ArcPredicate& edge,
                                        std::size_t max_len) {
  std::vector<Walk> out;
  if (max_len == 0) return out;
  std::vector<char> on_path(g.node_count(), 0);
  Walk cur;
  std::function<void(std::size_t)> dfs = [&](std::size_t n) {
    if (!cur.arcs.empty() && end(n)) out.push_back(cur);
    if (cur.arcs.size() >= max_len) return;
    for (std::size_t a : g.out(n)) {
      const std::size_t next = g.arc(a).to;
      if (on_path[next] || !edge(a)) continue;
      on_path[next] = 1;
      cur.nodes.push_back(next);
      cur.arcs.push_back(a);
      dfs(next);
      cur.nodes.pop_back();
      cur.arcs.pop_back();
      on_path[next] = 0;
    }
  };
  for (std::size_t s = 0; s < g.node_count(); ++s) {
    if (!start(s)) continue;
    on_path[s] = 1;
    cur.nodes.assign(1, s);
    cur.arcs.clear();
    dfs(s);
    on_path[s] = 0;
  }
  sort_walks(g, out);
  return out;
}

inline constexpr std::size_t kDefaultClosureBound = 10000;

struct ClosureMatrix {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<bool>> reach;

  std::size_t size() const { return reach.size(); }
  bool reachable(const std::string& a, const std::string& b) const {
    auto i = index.find(a), j = index.find(b);
    if (i == index.end() || j == index.end()) return false;
    return reach[i->second][j->second];
  }
};

/// Reflexive transitive closure over admitted arcs; one BFS per node.
inline ClosureMatrix transitive_closure(const LabeledDigraph& g, const ArcPredicate& edge,
                                        std::size_t bound = kDefaultClosureBound) {
  const std::size_t n = g.node_count();
  if (n > bound) {
    throw Error(ErrorCode::GraphTooLarge,
                std::to_string(n) + " nodes exceeds the closure bound of " + std::to_string(bound));
  }
  ClosureMatrix m;
  m.reach.assign(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) m.index.emplace(g.id(i), i);
  std::vector<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    auto& row = m.reach[s];
    row[s] = true;
    queue.assign(1, s);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (std::size_t a : g.out(queue[head])) {
        const std::size_t t = g.arc(a).to;
        if (!row[t] && edge(a)) {
          row[t] = true;
          queue.push_back(t);
        }
      }
    }
  }
  return m;
}

struct CycleElimination {
  LabeledDigraph graph;
  std::vector<LabeledDigraph::Arc> removed;
};

/// Removes DFS back edges, visiting nodes and arcs in insertion order.
inline CycleElimination eliminate_cycles(const LabeledDigraph& g) {
  enum : char { White, Grey, Black };
  std::vector<char> color(g.node_count(), White);
  std::vector<char> drop(g.arc_count(), 0);
  struct Frame {
    std::size_t node, next;
  };
  std::vector<Frame> stack;
  for (std::size_t root = 0; root < g.node_count(); ++root) {
    if (color[root] != White) continue;
    color[root] = Grey;
    stack.push_back({root, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto& arcs = g.out(f.node);
      if (f.next == arcs.size()) {
        color[f.node] = Black;
        stack.pop_back();
        continue;
      }
      const std::size_t a = arcs[f.next++];
      const std::size_t t = g.arc(a).to;
      if (color[t] == Grey) {
        drop[a] = 1;
      } else if (color[t] == White) {
        color[t] = Grey;
        stack.push_back({t, 0});
      }
    }
  }
  CycleElimination r;
  for (std::size_t i = 0; i < g.node_count(); ++i) r.graph.add_node(g.id(i));
  for (std::size_t a = 0; a < g.arc_count(); ++a) {
    const auto& arc = g.arc(a);
    if (drop[a]) r.removed.push_back(arc);
    else r.graph.add_arc(arc.from, arc.to, arc.label, arc.key);
  }
  return r;
}

/// Kahn's algorithm; true when the graph has no directed cycle.
inline bool is_acyclic(const LabeledDigraph& g) {
  std::vector<std::size_t> indeg(g.node_count(), 0);
  for (std::size_t a = 0; a < g.arc_count(); ++a) ++indeg[g.arc(a).to];
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < g.node_count(); ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::size_t seen = 0;
  while (!ready.empty()) {
    const std::size_t n = ready.back();
    ready.pop_back();
    ++seen;
    for (std::size_t a : g.out(n))
      if (--indeg[g.arc(a).to] == 0) ready.push_back(g.arc(a).to);
  }
  return seen == g.node_count();
}

// --- brute-force path oracle --------------------------------------------------

/// Decides whether a regex term accepts the node (is_edge false) or edge
/// (is_edge true) at a TPM slot.
using TermPredicate = std::function<bool(const query::Term&, bool is_edge, std::size_t slot)>;

namespace detail {

/// End positions reachable by matching `r` from `pos` over an alternating
/// node/edge symbol sequence.
inline std::set<std::size_t> match_from(const query::Regex& r, const std::vector<std::size_t>& symbols,
                                        std::size_t pos, const TermPredicate& term) {
  using K = query::Regex::Kind;
  std::set<std::size_t> out;
  switch (r.kind) {
    case K::Term:
      if (pos < symbols.size() && term(r.term, pos % 2 == 1, symbols[pos])) out.insert(pos + 1);
      return out;
    case K::Seq: {
      std::set<std::size_t> cur{pos};
      for (const auto& c : r.children) {
        std::set<std::size_t> next;
        for (std::size_t p : cur) {
          auto m = match_from(*c, symbols, p, term);
          next.insert(m.begin(), m.end());
        }
        cur = std::move(next);
      }
      return cur;
    }
    case K::Alt:
      for (const auto& c : r.children) {
        auto m = match_from(*c, symbols, pos, term);
        out.insert(m.begin(), m.end());
      }
      return out;
    case K::Opt:
      out = match_from(*r.children[0], symbols, pos, term);
      out.insert(pos);
      return out;
    case K::Star:
    case K::Plus: {
      std::set<std::size_t> frontier = match_from(*r.children[0], symbols, pos, term);
      out = frontier;
      if (r.kind == K::Star) out.insert(pos);
      while (!frontier.empty()) {
        std::set<std::size_t> next;
        for (std::size_t p : frontier) {
          for (std::size_t q : match_from(*r.children[0], symbols, p, term))
            if (out.insert(q).second) next.insert(q);
        }
        frontier = std::move(next);
      }
      return out;
    }
  }
  return out;
}

}  // namespace detail

/// Enumerates every simple walk, keeps those the regex matches in full with
/// admitted endpoints, then drops walks contained in a longer match.
inline std::vector<query::GraphPath> oracle_match(const TpmGraph& g, const query::Regex& regex,
                                                  const TermPredicate& term, const NodePredicate& start,
                                                  const NodePredicate& end, std::size_t max_nodes = 12) {
  if (g.node_count() > max_nodes) {
    throw Error(ErrorCode::GraphTooLarge,
                "oracle limited to " + std::to_string(max_nodes) + " nodes, graph has " +
                    std::to_string(g.node_count()));
  }
  std::vector<query::GraphPath> matches;
  std::vector<std::size_t> symbols;
  std::vector<char> on_path(g.node_slot_count(), 0);
  std::function<void()> walk = [&] {
    const std::size_t last = symbols.back();
    if (start(symbols.front()) && end(last)) {
      auto ends = detail::match_from(regex, symbols, 0, term);
      if (ends.count(symbols.size()) != 0) {
        query::GraphPath p;
        for (std::size_t i = 0; i < symbols.size(); ++i) {
          if (i % 2 == 0) p.nodes.push_back(g.node_at(symbols[i])->node_id);
          else p.edges.push_back(edge_key(*g.edge_at(symbols[i])));
        }
        matches.push_back(std::move(p));
      }
    }
    for (std::size_t e : g.out_slots(last)) {
      const std::size_t next = g.edge_target_slot(e);
      if (on_path[next]) continue;
      on_path[next] = 1;
      symbols.push_back(e);
      symbols.push_back(next);
      walk();
      symbols.pop_back();
      symbols.pop_back();
      on_path[next] = 0;
    }
  };
  for (std::size_t s = 0; s < g.node_slot_count(); ++s) {
    if (g.node_at(s) == nullptr) continue;
    on_path[s] = 1;
    symbols.assign(1, s);
    walk();
    on_path[s] = 0;
  }

  auto contains = [](const query::GraphPath& big, const query::GraphPath& small) {
    if (small.nodes.size() >= big.nodes.size()) return false;
    for (std::size_t off = 0; off + small.nodes.size() <= big.nodes.size(); ++off) {
      bool ok = true;
      for (std::size_t i = 0; ok && i < small.nodes.size(); ++i) ok = big.nodes[off + i] == small.nodes[i];
      for (std::size_t i = 0; ok && i < small.edges.size(); ++i) ok = big.edges[off + i] == small.edges[i];
      if (ok) return true;
    }
    return false;
  };
  std::vector<query::GraphPath> out;
  for (const auto& m : matches) {
    bool dominated = false;
    for (const auto& other : matches) {
      if (contains(other, m)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(m);
  }
  std::sort(out.begin(), out.end(), query::path_less);
  return out;
}

}  // namespace tpm::reach
