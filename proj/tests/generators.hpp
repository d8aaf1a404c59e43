#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tpm/tpm.hpp"

namespace tpm::testing {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }
inline bool coin(Rng& rng, unsigned percent) { return rng() % 100 < percent; }

// --- small random TPM graphs ----------------------------------------------------

/// Up to `max_nodes` events and instances on ticks 1..5 with random legal
/// edges. Illegal draws are skipped, so every relation shows up now and then.
inline TpmGraph random_tpm(Rng& rng, std::size_t max_nodes = 12) {
  TpmGraph g;
  const std::size_t n = 2 + pick(rng, max_nodes - 1);
  std::size_t events = 0;
  for (std::size_t tries = 0; g.node_count() < n && tries < 200; ++tries) {
    const Timestamp t{1 + pick(rng, 5)};
    try {
      switch (pick(rng, 3)) {
        case 0: g.add_node(make_instance(NodeKind::Event, "E" + std::to_string(events++), t)); break;
        case 1: g.add_node(make_instance(NodeKind::ArtifactInstance, pick(rng, 2) ? "A" : "B", t)); break;
        default: g.add_node(make_instance(NodeKind::AgentInstance, "G", t)); break;
      }
    } catch (const Error&) {
    }
  }
  static constexpr Relation kRels[] = {Relation::Used,           Relation::WasGeneratedBy,
                                       Relation::WasTriggeredBy, Relation::WasDerivedFrom,
                                       Relation::WasControlledBy, Relation::HappenedBefore};
  const auto nodes = g.nodes();
  for (std::size_t i = 0; i < nodes.size() * 4; ++i) {
    const auto* a = nodes[pick(rng, nodes.size())];
    const auto* b = nodes[pick(rng, nodes.size())];
    try {
      g.add_edge({a->node_id, b->node_id, kRels[pick(rng, std::size(kRels))], std::nullopt});
    } catch (const Error&) {
    }
  }
  return g;
}

// --- random path queries with an independent term predicate -----------------

using SlotPredicate = std::function<bool(const TpmGraph&, std::size_t slot)>;

struct PathCase {
  std::string text;
  query::Query query;
  /// Constraint per variable, evaluated straight off the records.
  std::map<std::string, SlotPredicate> node_vars, edge_vars;
};

namespace detail {

struct RegexGen {
  Rng& rng;
  std::set<std::string> used_nodes, used_edges;

  std::string node() {
    const std::string v = "n" + std::to_string(pick(rng, 3));
    used_nodes.insert(v);
    return "?" + v;
  }
  std::string edge() {
    static const char* kConst[] = {"happenedBefore", "wasDerivedFrom", "used", "wasTriggeredBy"};
    if (coin(rng, 25)) return kConst[pick(rng, std::size(kConst))];
    const std::string v = "e" + std::to_string(pick(rng, 2));
    used_edges.insert(v);
    return "?" + v;
  }
  std::string op() {
    static const char* kOps[] = {"", "", "?", "+", "*"};
    return kOps[pick(rng, std::size(kOps))];
  }
  std::string segment(int depth) {
    if (depth <= 0 || coin(rng, 55)) {
      std::string s = edge() + " " + node();
      const std::string o = op();
      return o.empty() ? s : "(" + s + ")" + o;
    }
    std::string s = "(" + segments(depth - 1, 1);
    while (coin(rng, 35)) s += " | " + segments(depth - 1, 1);
    return s + ")" + op();
  }
  std::string segments(int depth, std::size_t min) {
    std::string s;
    const std::size_t k = min + pick(rng, 3);
    for (std::size_t i = 0; i < k; ++i) s += (s.empty() ? "" : " ") + segment(depth);
    return s;
  }
  std::string path() {
    std::string s = node();
    const std::string tail = segments(2, 0);
    return tail.empty() ? s : s + " " + tail;
  }
};

}  // namespace detail

inline PathCase random_path_case(Rng& rng) {
  detail::RegexGen gen{rng, {}, {}};
  std::string regex = gen.path();
  if (coin(rng, 15)) regex += " | " + gen.path();

  std::string start, end;
  auto endpoint = [&](std::string& slot) {
    switch (pick(rng, 4)) {
      case 0: slot = "?n0"; gen.used_nodes.insert("n0"); break;
      case 1: slot = "?s"; gen.used_nodes.insert("s"); break;
      case 2: slot = "'A@" + std::to_string(1 + pick(rng, 5)) + "'"; break;
      default: break;
    }
  };
  if (coin(rng, 40)) endpoint(start);
  if (coin(rng, 30)) endpoint(end);

  PathCase c;
  std::string where;
  for (const auto& v : gen.used_nodes) {
    switch (pick(rng, 5)) {
      case 0: {
        static const NodeKind kKinds[] = {NodeKind::Event, NodeKind::ArtifactInstance, NodeKind::AgentInstance};
        const NodeKind k = kKinds[pick(rng, 3)];
        where += " ?" + v + " @kind " + std::string(to_string(k)) + ".";
        c.node_vars[v] = [k](const TpmGraph& g, std::size_t s) { return g.node_at(s)->kind == k; };
        break;
      }
      case 1: {
        const std::string e = pick(rng, 2) ? "A" : "B";
        where += " ?" + v + " @id " + e + ".";
        c.node_vars[v] = [e](const TpmGraph& g, std::size_t s) { return g.node_at(s)->entity_id == e; };
        break;
      }
      case 2: {
        const std::uint64_t t = 1 + pick(rng, 5);
        where += " ?" + v + " @timestamp ?ts_" + v + ". FILTER(?ts_" + v + " <= t" + std::to_string(t) + ").";
        c.node_vars[v] = [t](const TpmGraph& g, std::size_t s) { return g.node_at(s)->time().ticks <= t; };
        break;
      }
      default:
        c.node_vars[v] = [](const TpmGraph&, std::size_t) { return true; };
        if (coin(rng, 50)) where += " ?" + v + " @isA entityNode.";
        break;
    }
  }
  static const Relation kRels[] = {Relation::Used,           Relation::WasGeneratedBy,
                                   Relation::WasTriggeredBy, Relation::WasDerivedFrom,
                                   Relation::WasControlledBy, Relation::HappenedBefore};
  for (const auto& v : gen.used_edges) {
    switch (pick(rng, 3)) {
      case 0: {
        const Relation r = kRels[pick(rng, std::size(kRels))];
        where += " ?" + v + " @label " + std::string(to_string(r)) + ".";
        c.edge_vars[v] = [r](const TpmGraph& g, std::size_t s) { return g.edge_at(s)->relation == r; };
        break;
      }
      case 1: {
        const Relation a = kRels[pick(rng, std::size(kRels))];
        const Relation b = kRels[pick(rng, std::size(kRels))];
        where += " ?" + v + " @label ?l_" + v + ". FILTER(?l_" + v + " = " + std::string(to_string(a)) +
                 " || ?l_" + v + " = " + std::string(to_string(b)) + ").";
        c.edge_vars[v] = [a, b](const TpmGraph& g, std::size_t s) {
          return g.edge_at(s)->relation == a || g.edge_at(s)->relation == b;
        };
        break;
      }
      default:
        where += " ?" + v + " @isA edge.";
        c.edge_vars[v] = [](const TpmGraph&, std::size_t) { return true; };
        break;
    }
  }
  c.text = "pconstruct P (" + start + ", " + end + ", " + regex + ") as ?c where {" + where + " }";
  c.query = query::parse_query(c.text);
  return c;
}

/// The oracle's view of a case: path sets by brute-force enumeration.
inline std::vector<query::GraphPath> oracle_paths(const TpmGraph& g, const PathCase& c) {
  auto term = [&](const query::Term& t, bool is_edge, std::size_t slot) {
    if (!t.is_variable) {
      return is_edge ? iequals(to_string(g.edge_at(slot)->relation), t.literal.text)
                     : g.node_at(slot)->node_id == t.literal.text;
    }
    const auto& vars = is_edge ? c.edge_vars : c.node_vars;
    auto it = vars.find(t.name);
    return it == vars.end() || it->second(g, slot);
  };
  auto endpoint = [&](const std::optional<query::Term>& t) -> reach::NodePredicate {
    if (!t) return [](std::size_t) { return true; };
    return [&, t](std::size_t s) { return term(*t, false, s); };
  };
  return reach::oracle_match(g, *c.query.path->regex, term, endpoint(c.query.path->start),
                             endpoint(c.query.path->end));
}

// --- random query texts for round-trips -------------------------------------

namespace detail {

struct QueryGen {
  Rng& rng;
  std::vector<std::string> bound;

  std::string var() {
    const std::string v = "v" + std::to_string(pick(rng, 4));
    return "?" + v;
  }
  std::string text_constant() {
    static const char* kTexts[] = {"event", "artifact", "p4", "Analysis.doc", "`artifact timeseries'",
                                   "\"it's\"", "'two words'", "Sample_Analysis.pdf", "\"tab\\there\""};
    return kTexts[pick(rng, std::size(kTexts))];
  }
  std::string constant() {
    switch (pick(rng, 3)) {
      case 0: return std::to_string(pick(rng, 50));
      case 1: return "t" + std::to_string(pick(rng, 20));
      default: return text_constant();
    }
  }
  std::string term() { return coin(rng, 60) ? var() : constant(); }
  std::string pattern() {
    static const char* kAttrs[] = {"@isA", "@type", "@id", "@timestamp", "@project", "@label"};
    static const char* kRels[] = {"used", "wasGeneratedBy", "wasDerivedFrom", "happenedBefore", "isPartOf",
                                  "wasTriggeredBy", "wasControlledBy", "startedBefore"};
    std::string s = var();
    if (coin(rng, 60)) s += std::string(" ") + kAttrs[pick(rng, std::size(kAttrs))] + " " + term();
    else s += std::string(" ") + kRels[pick(rng, std::size(kRels))] + " " + term();
    return s;
  }
  std::string slot() {
    switch (pick(rng, 4)) {
      case 0: return "?";
      case 1: return "t" + std::to_string(pick(rng, 20));
      case 2: return "t";
      default: return "t+d";
    }
  }
  std::string bound_var() { return bound[pick(rng, bound.size())]; }
  std::string operand() { return coin(rng, 50) ? bound_var() : constant(); }
  std::string expr(int depth) {
    if (depth <= 0 || coin(rng, 40)) {
      switch (pick(rng, 4)) {
        case 0: {
          static const char* kOps[] = {"=", "!=", "<", "<=", ">", ">="};
          return operand() + " " + kOps[pick(rng, std::size(kOps))] + " " + operand();
        }
        case 1:
          return "Timesemantic(" + bound_var() + ", [" + slot() + "," + slot() + "," + slot() + "," + slot() + "])";
        case 2: {
          static const char* kWords[] = {"in", "on", "at", "during", "since", "after", "before", "till",
                                         "until", "by"};
          if (coin(rng, 20)) return "between(" + bound_var() + ", " + slot() + ", " + slot() + ")";
          return std::string(kWords[pick(rng, std::size(kWords))]) + "(" + bound_var() + ", " + slot() + ")";
        }
        default: return bound_var();
      }
    }
    switch (pick(rng, 4)) {
      case 0: return expr(depth - 1) + " && " + expr(depth - 1);
      case 1: return expr(depth - 1) + " || " + expr(depth - 1);
      case 2: return "!(" + expr(depth - 1) + ")";
      default: return "(" + expr(depth - 1) + ")";
    }
  }
  /// Patterns and filters; records the variables they bind.
  std::string body(std::string extra = {}) {
    std::string s = "where {" + extra;
    const std::size_t n = 1 + pick(rng, 4);
    for (std::size_t i = 0; i < n; ++i) s += " " + pattern() + (coin(rng, 80) ? "." : "");
    bound = collect(s);
    if (!bound.empty()) {
      const std::size_t f = pick(rng, 3);
      for (std::size_t i = 0; i < f; ++i) s += " FILTER(" + expr(2) + ").";
    }
    return s + " }";
  }
  static std::vector<std::string> collect(const std::string& s) {
    std::set<std::string> out;
    for (std::size_t i = 0; i + 2 < s.size(); ++i) {
      if (s[i] == '?' && s[i + 1] == 'v') out.insert(s.substr(i, 3));
    }
    return {out.begin(), out.end()};
  }
  std::string flags() {
    std::string s;
    if (coin(rng, 20)) s += " all";
    if (coin(rng, 20)) s += " inherited";
    return s;
  }
  std::string select() {
    const std::string b = body();
    std::string proj;
    if (bound.empty() || coin(rng, 30)) {
      proj = "*";
    } else {
      for (const auto& v : bound)
        if (coin(rng, 60) || proj.empty()) proj += (proj.empty() ? "" : " ") + v;
    }
    return "select" + flags() + " " + proj + " " + b;
  }
  std::string declarations(const std::string& cv, const std::string& kind) {
    std::string s;
    if (coin(rng, 50)) s += " ?" + cv + " @isA " + kind + ".";
    if (coin(rng, 50)) s += std::string(" ?") + cv + " @timed " + (coin(rng, 50) ? "true" : "false") + ".";
    if (coin(rng, 30)) s += " ?" + cv + " @description `made up'.";
    if (coin(rng, 20)) s += std::string(" ?") + cv + " @mode " + (coin(rng, 50) ? "push" : "pull") + ".";
    if (coin(rng, 20)) s += " ?" + cv + " @interval " + std::to_string(1 + pick(rng, 9)) + ".";
    return s;
  }
  std::string fconstruct() {
    const std::string b = body(declarations("f", "folderNode"));
    std::string s = "fconstruct F" + std::to_string(pick(rng, 10)) + " as ?f";
    if (coin(rng, 20)) return s + " select (F1, 'folder(2)') " + b;
    if (coin(rng, 60) && !bound.empty()) return s + " select" + flags() + " " + bound_var() + " " + b;
    return s + " " + b;
  }
  std::string pconstruct() {
    RegexGen rg{rng, {}, {}};
    const std::string regex = rg.path();
    std::string start = coin(rng, 50) ? "?n0" : "";
    std::string end = coin(rng, 30) ? "'Analysis.doc@6'" : "";
    return "pconstruct P" + std::to_string(pick(rng, 10)) + " (" + start + "," + end + "," + regex +
           ") as ?p " + body(declarations("p", "pathNode"));
  }
  std::string statement() {
    switch (pick(rng, 4)) {
      case 0: return select();
      case 1: return fconstruct();
      case 2: return pconstruct();
      default: {
        std::string scope = "F1";
        if (coin(rng, 40)) scope += ", 'path,2'";
        return "(" + scope + ") apply (" + select() + ")";
      }
    }
  }
};

}  // namespace detail

inline std::string random_query_text(Rng& rng) {
  detail::QueryGen g{rng, {}};
  return g.statement();
}

// --- append-only change sequences for agent convergence ---------------------

/// Definitions watched by the convergence check; push variants add @mode.
inline std::vector<std::string> convergence_definitions(bool push) {
  const std::string mode = push ? " ?c @mode push." : "";
  return {
      "fconstruct watch as ?c select ?e where { ?c @timed true." + mode +
          " ?e @type event. ?e @project p4. ?e @timestamp ?ts. FILTER(Timesemantic(?ts,[t2,?,?,?])). }",
      "fconstruct readers as ?c select ?e where { ?c @timed true." + mode + " ?e used ?a. ?a @id doc. }",
      "pconstruct series ( , , ?n (?x ?n)+) as ?c where { ?c @timed true." + mode +
          " ?n @id doc. ?x @label happenedBefore. }",
  };
}

/// Seed graph: three events, two reading a document.
inline TpmGraph convergence_base() {
  TpmGraph g;
  for (std::uint64_t t = 1; t <= 3; ++t) {
    g.add_node(make_instance(NodeKind::Event, "ev" + std::to_string(t), Timestamp{t},
                             {{"project", t == 2 ? "p5" : "p4"}}));
  }
  g.add_node(make_instance(NodeKind::ArtifactInstance, "doc", Timestamp{1}));
  g.add_node(make_instance(NodeKind::ArtifactInstance, "doc", Timestamp{3}));
  g.add_edge({"ev1@1", "doc@1", Relation::Used, std::nullopt});
  g.add_edge({"ev3@3", "doc@3", Relation::Used, std::nullopt});
  return g;
}

/// One random append-only step at tick `now`, applied identically to every
/// graph through `apply`. Returns the touched nodes and explicit edges;
/// edges incident to touched nodes are left to the caller.
inline ChangeSet random_change(Rng& rng, const TpmGraph& g, Timestamp now, std::size_t step,
                               const std::function<void(const std::function<void(TpmGraph&)>&)>& apply) {
  ChangeSet cs;
  switch (pick(rng, 4)) {
    case 0: {
      const std::string project = coin(rng, 60) ? "p4" : "p5";
      const std::string id = instance_id("ev_" + std::to_string(step), now);
      const bool reads = coin(rng, 50);
      apply([&](TpmGraph& x) {
        x.add_node(make_instance(NodeKind::Event, "ev_" + std::to_string(step), now, {{"project", project}}));
        if (reads) {
          if (!x.contains(instance_id("doc", now))) x.add_node(make_instance(NodeKind::ArtifactInstance, "doc", now));
          x.add_edge({id, instance_id("doc", now), Relation::Used, std::nullopt});
        }
      });
      cs.nodes.push_back(id);
      if (reads) cs.nodes.push_back(instance_id("doc", now));
      break;
    }
    case 1: {
      const std::string id = instance_id("doc", now);
      if (g.contains(id)) break;
      apply([&](TpmGraph& x) { x.add_node(make_instance(NodeKind::ArtifactInstance, "doc", now)); });
      cs.nodes.push_back(id);
      break;
    }
    case 2: {
      std::vector<std::string> candidates;
      for (const auto* n : g.nodes()) {
        auto it = n->attributes.find("project");
        if (n->kind == NodeKind::Event && it != n->attributes.end() && it->second != "p4") {
          candidates.push_back(n->node_id);
        }
      }
      if (candidates.empty()) break;
      const std::string id = candidates[pick(rng, candidates.size())];
      apply([&](TpmGraph& x) { x.set_attribute(id, "project", "p4"); });
      cs.nodes.push_back(id);
      break;
    }
    default: {
      std::vector<const NodeRecord*> events;
      for (const auto* n : g.nodes())
        if (n->kind == NodeKind::Event) events.push_back(n);
      if (events.size() < 2) break;
      const auto* a = events[pick(rng, events.size())];
      const auto* b = events[pick(rng, events.size())];
      if (!(a->time() > b->time())) break;
      const EdgeRecord e{a->node_id, b->node_id, Relation::WasTriggeredBy, std::nullopt};
      if (g.find_edge(edge_key(e)) != nullptr) break;
      apply([&](TpmGraph& x) { x.add_edge(e); });
      cs.edges_added.push_back(edge_key(e));
      break;
    }
  }
  return cs;
}

struct ConvergenceOutcome {
  std::map<std::string, std::vector<std::string>> pull, push;
  std::size_t steps = 0;
};

/// Drives a pull engine (interval 1) and a push engine through the same
/// random append-only sequence.
inline ConvergenceOutcome run_convergence(std::uint64_t seed, std::size_t steps = 12) {
  Rng rng(seed);
  Engine pull(convergence_base()), push(convergence_base());
  Timestamp now{3};
  for (const auto& d : convergence_definitions(false)) pull.execute(d, now);
  for (const auto& d : convergence_definitions(true)) push.execute(d, now);
  ConvergenceOutcome out;
  for (std::size_t s = 0; s < steps; ++s) {
    now = Timestamp{now.ticks + 1};
    auto apply = [&](const std::function<void(TpmGraph&)>& f) {
      pull.write([&](TpmGraph& g) { f(g); });
      push.write([&](TpmGraph& g) { f(g); });
    };
    ChangeSet cs = random_change(rng, pull.graph(), now, s, apply);
    ChangeSet full = cs;
    full.edges_added.clear();
    for (const auto& id : cs.nodes) {
      for (const auto* e : pull.graph().in_edges(id)) full.edges_added.push_back(edge_key(*e));
      for (const auto* e : pull.graph().out_edges(id)) full.edges_added.push_back(edge_key(*e));
    }
    for (const auto& k : cs.edges_added) full.edges_added.push_back(k);
    pull.tick(now);
    push.notify_change(full, now);
    ++out.steps;
  }
  for (const auto& [name, m] : pull.materialized()) out.pull[name] = m.members;
  for (const auto& [name, m] : push.materialized()) out.push[name] = m.members;
  return out;
}

}  // namespace tpm::testing
