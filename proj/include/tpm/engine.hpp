#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/graph.hpp"
#include "tpm/model.hpp"
#include "tpm/query/ast.hpp"
#include "tpm/query/eval.hpp"
#include "tpm/query/parser.hpp"

namespace tpm {

/// A folder or path node together with the query that defines it.
struct MaterializedNode {
  std::string name;
  NodeKind kind = NodeKind::FolderNode;
  query::QueryPtr definition;
  std::vector<std::string> members;
  std::vector<query::GraphPath> paths;
  bool timed = false;
  Timestamp created;
  std::optional<Timestamp> declared_start;
  std::optional<std::uint64_t> declared_duration;
};

struct EvolutionDelta {
  std::string target;
  Timestamp at;
  std::vector<std::string> added;
  std::vector<std::string> removed;

  bool empty() const { return added.empty() && removed.empty(); }
  bool operator==(const EvolutionDelta&) const = default;
};

struct AgentRegistration {
  enum class Mode { Pull, Push };

  std::string agent_id;
  std::string target;
  Mode mode = Mode::Pull;
  std::uint64_t interval = 1;           // Pull
  std::unordered_set<std::string> watched;  // Push
  Timestamp last_run;
};

inline std::string agent_id_for(const std::string& target) { return target + "#agent"; }

/// Graph elements touched by a mutation.
struct ChangeSet {
  std::vector<std::string> nodes;
  std::vector<std::string> edges_added;  // edge keys
};

/// Membership of a container as of some time.
struct Snapshot {
  std::vector<std::string> members;
  std::vector<query::GraphPath> paths;
};

struct EngineOptions {
  /// Register an agent for every construct declared `@timed true`.
  bool auto_register = true;
  std::optional<std::size_t> max_path_len;
};

struct QueryOutcome {
  query::BindingSet rows;
  /// Name of the container a construct created.
  std::optional<std::string> materialized;
  std::vector<std::string> warnings;
};

class Engine {
 public:
  explicit Engine(TpmGraph graph = {}, EngineOptions options = {})
      : graph_(std::move(graph)), options_(std::move(options)) {}

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // --- graph access ---------------------------------------------------------

  /// Reads under the shared lock.
  template <typename F>
  auto read(F&& f) const {
    std::shared_lock lock(mutex_);
    return f(static_cast<const TpmGraph&>(graph_));
  }

  /// Mutates under the exclusive lock. Callers report the change through
  /// notify_change so push agents can react.
  template <typename F>
  auto write(F&& f) {
    std::unique_lock lock(mutex_);
    return f(graph_);
  }

  /// Unsynchronized access for single-threaded callers.
  const TpmGraph& graph() const { return graph_; }
  TpmGraph& graph() { return graph_; }

  const std::map<std::string, MaterializedNode>& materialized() const { return materialized_; }
  const MaterializedNode& materialized(const std::string& name) const {
    auto it = materialized_.find(name);
    if (it == materialized_.end()) throw Error(ErrorCode::UnknownContainer, "no folder or path node '" + name + "'");
    return it->second;
  }
  const std::map<std::string, AgentRegistration>& agents() const { return agents_; }
  const std::vector<EvolutionDelta>& evolution_log() const { return log_; }
  const std::vector<std::string>& agent_failures() const { return failures_; }
  const EngineOptions& options() const { return options_; }

  // --- queries --------------------------------------------------------------

  QueryOutcome execute(const std::string& text, Timestamp now) { return execute(query::parse_query(text), now); }

  QueryOutcome execute(const query::Query& q, Timestamp now) {
    QueryOutcome out;
    switch (q.kind) {
      case query::StatementKind::Select: {
        std::shared_lock lock(mutex_);
        out.rows = query::eval_select(graph_, q, eval_options());
        return out;
      }
      case query::StatementKind::Apply: {
        std::shared_lock lock(mutex_);
        out.rows = apply_locked(q);
        return out;
      }
      case query::StatementKind::Fconstruct:
      case query::StatementKind::Pconstruct: {
        std::unique_lock lock(mutex_);
        out.materialized = materialize_locked(std::make_shared<query::Query>(q), now, out.warnings);
        return out;
      }
    }
    return out;
  }

  /// Evaluates an apply statement's inner query per folder, or per path
  /// with a 1-based path index.
  query::BindingSet apply(const query::Query& q) const {
    std::shared_lock lock(mutex_);
    return apply_locked(q);
  }

  // --- agents ---------------------------------------------------------------

  const AgentRegistration& register_agent(const std::string& target, AgentRegistration::Mode mode,
                                          std::uint64_t interval = 1) {
    std::unique_lock lock(mutex_);
    return register_locked(target, mode, interval);
  }

  /// Runs every pull agent whose interval has elapsed.
  std::vector<EvolutionDelta> tick(Timestamp now) {
    std::unique_lock lock(mutex_);
    std::vector<EvolutionDelta> out;
    for (auto& [target, agent] : agents_) {
      if (agent.mode != AgentRegistration::Mode::Pull) continue;
      if (now < agent.last_run || now.ticks - agent.last_run.ticks < agent.interval) continue;
      run_agent(agent, now, out);
    }
    return out;
  }

  /// Re-runs push agents that the change may affect: it touches a watched
  /// member, adds an edge at a member, or adds an element the defining query
  /// could match.
  std::vector<EvolutionDelta> notify_change(const ChangeSet& change, Timestamp now) {
    std::unique_lock lock(mutex_);
    std::vector<EvolutionDelta> out;
    for (auto& [target, agent] : agents_) {
      if (agent.mode != AgentRegistration::Mode::Push) continue;
      if (!relevant(agent, change)) continue;
      run_agent(agent, now, out);
    }
    return out;
  }

  /// Membership replayed from the evolution log up to `t`. Paths are
  /// truncated to the members present at `t`.
  Snapshot evolution_at(const std::string& target, Timestamp t) const {
    std::shared_lock lock(mutex_);
    const MaterializedNode& m = materialized(target);
    std::vector<std::string> order;
    std::set<std::string> present;
    for (const auto& d : log_) {
      if (d.target != target || t < d.at) continue;
      for (const auto& id : d.added)
        if (present.insert(id).second) order.push_back(id);
      for (const auto& id : d.removed) present.erase(id);
    }
    Snapshot s;
    for (const auto& id : order)
      if (present.count(id) != 0) s.members.push_back(id);
    for (const auto& p : m.paths) {
      query::GraphPath cut;
      for (const auto& id : p.nodes)
        if (present.count(id) != 0) cut.nodes.push_back(id);
      if (cut.nodes.empty()) continue;
      std::unordered_set<std::string> kept(cut.nodes.begin(), cut.nodes.end());
      for (const auto& key : p.edges) {
        const EdgeRecord* e = graph_.find_edge(key);
        if (e != nullptr && kept.count(e->from) != 0 && kept.count(e->to) != 0) cut.edges.push_back(key);
      }
      s.paths.push_back(std::move(cut));
    }
    return s;
  }

  /// One line per logged delta: `delta <agent_id> <t> +id... -id...`.
  std::string export_log() const {
    std::shared_lock lock(mutex_);
    std::string out;
    for (const auto& d : log_) {
      out += "delta " + agent_id_for(d.target) + " " + std::to_string(d.at.ticks);
      for (const auto& id : d.added) out += " +" + id;
      for (const auto& id : d.removed) out += " -" + id;
      out += '\n';
    }
    return out;
  }

  // --- state restore (workspace loading) ------------------------------------

  void restore(MaterializedNode node) {
    std::unique_lock lock(mutex_);
    const std::string name = node.name;
    materialized_[name] = std::move(node);
  }
  void restore(AgentRegistration agent) {
    std::unique_lock lock(mutex_);
    const std::string target = agent.target;
    agents_[target] = std::move(agent);
  }
  void restore_log(std::vector<EvolutionDelta> log) {
    std::unique_lock lock(mutex_);
    log_ = std::move(log);
  }

 private:
  query::EvalOptions eval_options() const {
    query::EvalOptions o;
    o.max_path_len = options_.max_path_len;
    return o;
  }

  struct Window {
    Timestamp start;
    std::uint64_t duration = 0;
  };

  std::optional<Window> span_of(const std::vector<std::string>& members) const {
    if (members.empty()) return std::nullopt;
    Timestamp lo{~std::uint64_t{0}}, hi{0};
    for (const auto& id : members) {
      const NodeRecord& n = graph_.node(id);
      lo = std::min(lo, n.time());
      hi = std::max(hi, n.end_time());
    }
    return Window{lo, hi.ticks - lo.ticks};
  }

  /// Window for a container: declared, else the members' span, else
  /// (now, 0).
  Window window_for(const query::ConstructResult& r, Timestamp now, std::vector<std::string>* warnings) const {
    const auto span = span_of(r.members);
    if (r.declared_start || r.declared_duration) {
      Window w{r.declared_start.value_or(span ? span->start : now), r.declared_duration.value_or(0)};
      if (!r.declared_duration && span) w.duration = span->start.ticks + span->duration - std::min(w.start.ticks, span->start.ticks);
      const std::uint64_t end = w.start.ticks + w.duration;
      for (const auto& id : r.members) {
        const NodeRecord& n = graph_.node(id);
        if (n.time() < w.start || n.end_time().ticks > end) {
          throw Error(ErrorCode::TimeBoundViolation,
                      id + " lies outside the declared window of " + r.name + " [t" +
                          std::to_string(w.start.ticks) + ", t" + std::to_string(end) + "]");
        }
      }
      return w;
    }
    if (span) return *span;
    if (warnings) warnings->push_back(r.name + " has no members; window set to (t" + std::to_string(now.ticks) + ", 0)");
    return Window{now, 0};
  }

  std::string materialize_locked(query::QueryPtr q, Timestamp now, std::vector<std::string>& warnings) {
    if (materialized_.count(q->target) != 0 || graph_.contains(q->target)) {
      throw Error(ErrorCode::NameCollision, "'" + q->target + "' already exists");
    }
    query::ConstructResult r = query::eval_construct(graph_, *q, eval_options());
    const Window w = window_for(r, now, &warnings);

    Attributes attrs = r.attributes;
    NodeRecord node = make_container(r.kind, r.name, w.start, w.duration, std::move(attrs));
    node.timed = r.timed;
    TpmGraph staged = graph_;
    staged.add_node(node);
    for (const auto& m : r.members) staged.add_edge(EdgeRecord{m, r.name, Relation::IsPartOf, std::nullopt});
    graph_ = std::move(staged);

    MaterializedNode mn;
    mn.name = r.name;
    mn.kind = r.kind;
    mn.definition = q;
    mn.members = r.members;
    mn.paths = std::move(r.paths);
    mn.timed = r.timed;
    mn.created = now;
    mn.declared_start = r.declared_start;
    mn.declared_duration = r.declared_duration;
    materialized_[r.name] = mn;

    log_additions(r.name, r.members, now, nullptr);
    if (r.timed && options_.auto_register) {
      register_locked(r.name, r.push_mode ? AgentRegistration::Mode::Push : AgentRegistration::Mode::Pull,
                      r.interval);
      agents_[r.name].last_run = now;
    }
    return r.name;
  }

  /// Logs additions at the member's own time (capped at `now`), one delta
  /// per distinct time.
  void log_additions(const std::string& target, const std::vector<std::string>& added, Timestamp now,
                     std::vector<EvolutionDelta>* out) {
    std::map<Timestamp, std::vector<std::string>> by_time;
    for (const auto& id : added) {
      const NodeRecord* n = graph_.find(id);
      const Timestamp at = n ? std::min(n->time(), now) : now;
      by_time[at].push_back(id);
    }
    for (auto& [at, ids] : by_time) {
      EvolutionDelta d{target, at, std::move(ids), {}};
      log_.push_back(d);
      if (out) out->push_back(std::move(d));
    }
  }

  const AgentRegistration& register_locked(const std::string& target, AgentRegistration::Mode mode,
                                           std::uint64_t interval) {
    auto it = materialized_.find(target);
    if (it == materialized_.end()) {
      throw Error(ErrorCode::UnknownContainer, "no folder or path node '" + target + "'");
    }
    if (!it->second.timed) throw Error(ErrorCode::NotTimed, target + " is not declared @timed true");
    if (agents_.count(target) != 0) {
      throw Error(ErrorCode::DuplicateRegistration, target + " already has an agent");
    }
    if (mode == AgentRegistration::Mode::Pull && interval == 0) {
      throw Error(ErrorCode::SyntaxError, "pull interval must be positive");
    }
    AgentRegistration a;
    a.agent_id = agent_id_for(target);
    a.target = target;
    a.mode = mode;
    a.interval = interval;
    a.last_run = it->second.created;
    if (mode == AgentRegistration::Mode::Push) a.watched.insert(it->second.members.begin(), it->second.members.end());
    return agents_[target] = std::move(a);
  }

  void run_agent(AgentRegistration& agent, Timestamp now, std::vector<EvolutionDelta>& out) {
    try {
      auto d = refresh(agent.target, now);
      agent.last_run = now;
      const auto& m = materialized_.at(agent.target);
      if (agent.mode == AgentRegistration::Mode::Push) {
        agent.watched.clear();
        agent.watched.insert(m.members.begin(), m.members.end());
      }
      if (d.empty()) out.push_back(EvolutionDelta{agent.target, now, {}, {}});
      for (auto& x : d) out.push_back(std::move(x));
    } catch (const Error& e) {
      failures_.push_back(agent.agent_id + " at t" + std::to_string(now.ticks) + ": " + e.what());
    }
  }

  /// Re-evaluates a container's definition and applies the membership
  /// change. Returns the logged deltas.
  std::vector<EvolutionDelta> refresh(const std::string& name, Timestamp now) {
    MaterializedNode& m = materialized_.at(name);
    query::EvalOptions o = eval_options();
    o.hidden.insert(name);
    query::ConstructResult r = query::eval_construct(graph_, *m.definition, o);

    std::unordered_set<std::string> before(m.members.begin(), m.members.end());
    std::unordered_set<std::string> after(r.members.begin(), r.members.end());
    std::vector<std::string> added, removed;
    for (const auto& id : r.members)
      if (before.count(id) == 0) added.push_back(id);
    for (const auto& id : m.members)
      if (after.count(id) == 0) removed.push_back(id);

    const Window w = window_for(r, now, nullptr);
    TpmGraph staged = graph_;
    for (const auto& id : removed) staged.remove_edge(edge_key(id, Relation::IsPartOf, name));
    if (!r.members.empty() || !m.members.empty()) staged.set_container_window(name, w.start, w.duration);
    for (const auto& id : added) staged.add_edge(EdgeRecord{id, name, Relation::IsPartOf, std::nullopt});
    graph_ = std::move(staged);

    m.members = std::move(r.members);
    m.paths = std::move(r.paths);

    std::vector<EvolutionDelta> out;
    log_additions(name, added, now, &out);
    if (!removed.empty()) {
      EvolutionDelta d{name, now, {}, removed};
      log_.push_back(d);
      out.push_back(std::move(d));
    }
    return out;
  }

  bool relevant(const AgentRegistration& agent, const ChangeSet& change) const {
    for (const auto& id : change.nodes)
      if (agent.watched.count(id) != 0) return true;
    for (const auto& key : change.edges_added) {
      const EdgeRecord* e = graph_.find_edge(key);
      if (e == nullptr) continue;
      if (agent.watched.count(e->from) != 0 || agent.watched.count(e->to) != 0) return true;
    }
    const query::Query& q = *materialized_.at(agent.target).definition;
    for (const auto& id : change.nodes) {
      const NodeRecord* n = graph_.find(id);
      if (n != nullptr && !is_container(n->kind) && could_bind_node(q, *n)) return true;
    }
    for (const auto& key : change.edges_added) {
      const EdgeRecord* e = graph_.find_edge(key);
      if (e != nullptr && could_use_edge(q, *e)) return true;
    }
    return false;
  }

  /// Variables of the definition that take nodes, with their constant
  /// attribute constraints.
  static std::map<std::string, std::vector<const query::TriplePattern*>> variable_constraints(const query::Query& q) {
    std::map<std::string, std::vector<const query::TriplePattern*>> out;
    auto note = [&](const query::Term& t) {
      if (t.is_variable && t.name != q.container_var) out[t.name];
    };
    for (const auto& p : q.patterns) {
      note(p.subject);
      if (!p.is_attribute) note(p.object);
      if (p.is_attribute && p.subject.is_variable && !p.object.is_variable && p.subject.name != q.container_var) {
        out[p.subject.name].push_back(&p);
      }
    }
    if (q.path) {
      std::function<void(const query::Regex&)> walk = [&](const query::Regex& r) {
        if (r.kind == query::Regex::Kind::Term) note(r.term);
        for (const auto& c : r.children) walk(*c);
      };
      walk(*q.path->regex);
      if (q.path->start) note(*q.path->start);
      if (q.path->end) note(*q.path->end);
    }
    return out;
  }

  bool could_bind_node(const query::Query& q, const NodeRecord& n) const {
    for (const auto& [var, constraints] : variable_constraints(q)) {
      bool ok = true;
      for (const auto* p : constraints) {
        const std::string key = to_lower(p->predicate);
        auto v = query::detail::node_attribute(n, key);
        if (!v || !query::detail::matches_literal(graph_, *v, p->object.literal, key == "isa" || key == "label")) {
          ok = false;
          break;
        }
      }
      if (ok) return true;
    }
    bool named = false;
    auto check_term = [&](const query::Term& t) {
      if (!t.is_variable && t.literal.type == query::Literal::Type::Text && t.literal.text == n.node_id) named = true;
    };
    for (const auto& p : q.patterns) {
      if (!p.is_attribute) {
        check_term(p.subject);
        check_term(p.object);
      }
    }
    if (q.path) {
      std::function<void(const query::Regex&)> walk = [&](const query::Regex& r) {
        if (r.kind == query::Regex::Kind::Term) check_term(r.term);
        for (const auto& c : r.children) walk(*c);
      };
      walk(*q.path->regex);
      if (q.path->start) check_term(*q.path->start);
      if (q.path->end) check_term(*q.path->end);
    }
    return named;
  }

  static bool could_use_edge(const query::Query& q, const EdgeRecord& e) {
    for (const auto& p : q.patterns)
      if (!p.is_attribute && parse_relation(p.predicate) == e.relation) return true;
    if (q.path) return true;  // any edge may extend a path
    return false;
  }

  query::BindingSet apply_locked(const query::Query& q) const {
    if (q.kind != query::StatementKind::Apply || !q.inner) {
      throw Error(ErrorCode::SyntaxError, "expected an apply statement");
    }
    if (q.inner->kind != query::StatementKind::Select) {
      throw Error(ErrorCode::SyntaxError, "apply accepts a select statement");
    }
    for (const auto& name : q.scope) {
      if (materialized_.count(name) == 0) {
        throw Error(ErrorCode::UnknownContainer, "no folder or path node '" + name + "'");
      }
    }
    query::BindingSet out;
    bool first = true;
    auto append = [&](query::BindingSet part, std::optional<std::size_t> index) {
      if (first) {
        out.columns = part.columns;
        first = false;
      }
      for (auto& row : part.rows) {
        out.rows.push_back(std::move(row));
        out.path_index.push_back(index);
      }
    };
    for (const auto& name : q.scope) {
      const MaterializedNode& m = materialized_.at(name);
      const NodeRecord& c = graph_.node(name);
      if (m.kind == NodeKind::FolderNode) {
        query::EvalOptions o = eval_options();
        o.time = query::TimeContext{c.time(), *c.duration};
        const TpmGraph sub = graph_.subgraph({m.members.begin(), m.members.end()});
        append(query::eval_select(sub, *q.inner, o), std::nullopt);
        continue;
      }
      for (std::size_t i = 0; i < m.paths.size(); ++i) {
        const auto& p = m.paths[i];
        const TpmGraph sub = graph_.restrict_to(p.nodes, p.edges);
        query::EvalOptions o = eval_options();
        Timestamp lo{~std::uint64_t{0}}, hi{0};
        for (const auto& id : p.nodes) {
          lo = std::min(lo, sub.node(id).time());
          hi = std::max(hi, sub.node(id).end_time());
        }
        o.time = query::TimeContext{lo, hi.ticks - lo.ticks};
        append(query::eval_select(sub, *q.inner, o), i + 1);
      }
    }
    if (first) {
      // No units: still report the projected columns.
      out.columns = query::eval_select(TpmGraph{}, *q.inner).columns;
    }
    return out;
  }

  mutable std::shared_mutex mutex_;
  TpmGraph graph_;
  EngineOptions options_;
  std::map<std::string, MaterializedNode> materialized_;
  std::map<std::string, AgentRegistration> agents_;
  std::vector<EvolutionDelta> log_;
  std::vector<std::string> failures_;
};

}  // namespace tpm
