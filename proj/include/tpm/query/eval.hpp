#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/graph.hpp"
#include "tpm/model.hpp"
#include "tpm/query/ast.hpp"
#include "tpm/query/printer.hpp"
#include "tpm/query/time_semantics.hpp"
#include "tpm/text.hpp"

namespace tpm::query {

/// A bound value. Node and Edge values refer to slots of the evaluated graph.
struct Value {
  enum class Type { Node, Edge, Text, Integer, Time };
  Type type = Type::Text;
  std::size_t slot = 0;
  std::string text;
  std::uint64_t number = 0;

  static Value node(std::size_t s) { return {Type::Node, s, {}, 0}; }
  static Value edge(std::size_t s) { return {Type::Edge, s, {}, 0}; }
  static Value make_text(std::string t) { return {Type::Text, 0, std::move(t), 0}; }
  static Value integer(std::uint64_t n) { return {Type::Integer, 0, {}, n}; }
  static Value time(Timestamp t) { return {Type::Time, 0, {}, t.ticks}; }
};

/// Graph-independent rendering of one result value.
struct Cell {
  Value::Type type = Value::Type::Text;
  std::string text;

  bool operator==(const Cell&) const = default;
  auto operator<=>(const Cell&) const = default;
};

struct BindingSet {
  std::vector<std::string> columns;  // variable names without '?'
  std::vector<std::vector<Cell>> rows;
  /// 1-based path number per row for results evaluated per path.
  std::vector<std::optional<std::size_t>> path_index;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  /// Distinct texts of one column, in first-seen order.
  std::vector<std::string> column(const std::string& name) const {
    std::vector<std::string> out;
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) return out;
    const std::size_t c = static_cast<std::size_t>(it - columns.begin());
    std::set<std::string> seen;
    for (const auto& r : rows)
      if (seen.insert(r[c].text).second) out.push_back(r[c].text);
    return out;
  }
};

/// Alternating node/edge walk; edges are edge keys.
struct GraphPath {
  std::vector<std::string> nodes;
  std::vector<std::string> edges;

  bool operator==(const GraphPath&) const = default;
};

/// Golden ordering: edge count, then node id sequence, then edge keys.
inline bool path_less(const GraphPath& a, const GraphPath& b) {
  if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
  if (a.nodes != b.nodes) return a.nodes < b.nodes;
  return a.edges < b.edges;
}

struct EvalOptions {
  std::optional<TimeContext> time;
  /// Node ids invisible to the query, with their incident edges.
  std::unordered_set<std::string> hidden;
  std::optional<std::size_t> max_path_len;
};

namespace detail {

inline std::optional<std::uint64_t> as_number(const Value& v) {
  switch (v.type) {
    case Value::Type::Integer:
    case Value::Type::Time: return v.number;
    case Value::Type::Text: return text::parse_u64(v.text);
    default: return std::nullopt;
  }
}

inline bool is_numeric_type(const Value& v) {
  return v.type == Value::Type::Integer || v.type == Value::Type::Time;
}

inline Value from_literal(const Literal& l) {
  switch (l.type) {
    case Literal::Type::Text: return Value::make_text(l.text);
    case Literal::Type::Integer: return Value::integer(l.number);
    case Literal::Type::Time: return Value::time(Timestamp{l.number});
  }
  return {};
}

inline std::string render(const TpmGraph& g, const Value& v) {
  switch (v.type) {
    case Value::Type::Node: return g.node_at(v.slot)->node_id;
    case Value::Type::Edge: return edge_key(*g.edge_at(v.slot));
    case Value::Type::Text: return v.text;
    case Value::Type::Integer: return std::to_string(v.number);
    case Value::Type::Time: return "t" + std::to_string(v.number);
  }
  return {};
}

inline std::optional<std::string> find_attribute(const Attributes& attrs, const std::string& lower) {
  for (const auto& [k, v] : attrs)
    if (to_lower(k) == lower) return v;
  return std::nullopt;
}

/// Attribute lookup including the pseudo-attributes. `key` is lower case.
inline std::optional<Value> node_attribute(const NodeRecord& n, const std::string& key) {
  if (key == "isa") {
    switch (n.kind) {
      case NodeKind::FolderNode: return Value::make_text("folderNode");
      case NodeKind::PathNode: return Value::make_text("pathNode");
      default: return Value::make_text("entityNode");
    }
  }
  if (key == "timestamp") return Value::time(n.time());
  if (key == "start") return Value::time(n.time());
  if (key == "end") return Value::time(n.end_time());
  if (key == "duration") {
    if (!is_container(n.kind)) return std::nullopt;
    return Value::integer(*n.duration);
  }
  if (key == "timed") {
    if (!is_container(n.kind)) return std::nullopt;
    return Value::make_text(n.timed ? "true" : "false");
  }
  if (key == "kind") return Value::make_text(std::string(to_string(n.kind)));
  if (key == "node") return Value::make_text(n.node_id);
  if (auto stored = find_attribute(n.attributes, key)) return Value::make_text(*stored);
  if (key == "type") return Value::make_text(std::string(to_string(n.kind)));
  if (key == "id") return Value::make_text(n.entity_id);
  return std::nullopt;
}

inline std::optional<Value> edge_attribute(const EdgeRecord& e, const std::string& key) {
  if (key == "isa") return Value::make_text("edge");
  if (key == "label") return Value::make_text(std::string(to_string(e.relation)));
  if (key == "weight") {
    if (!e.weight) return std::nullopt;
    return Value::integer(*e.weight);
  }
  if (key == "id") return Value::make_text(edge_key(e));
  return std::nullopt;
}

/// Whether an attribute value equals a pattern constant. isA and label
/// compare case-insensitively; numbers compare numerically.
inline bool matches_literal(const TpmGraph& g, const Value& v, const Literal& l, bool fold_case) {
  if (l.type != Literal::Type::Text) {
    auto n = as_number(v);
    return n && *n == l.number;
  }
  if (v.type == Value::Type::Text) return fold_case ? iequals(v.text, l.text) : v.text == l.text;
  return render(g, v) == l.text;
}

inline bool values_equal(const TpmGraph& g, const Value& a, const Value& b) {
  if (a.type == b.type && (a.type == Value::Type::Node || a.type == Value::Type::Edge)) {
    return a.slot == b.slot;
  }
  auto na = as_number(a);
  auto nb = as_number(b);
  if (na && nb && (is_numeric_type(a) || is_numeric_type(b))) return *na == *nb;
  return render(g, a) == render(g, b);
}

using Binding = std::vector<std::optional<Value>>;

/// Variable name -> column index, in first-appearance order.
struct VarTable {
  std::vector<std::string> names;
  std::unordered_map<std::string, int> index;

  int add(const std::string& name) {
    auto [it, fresh] = index.emplace(name, static_cast<int>(names.size()));
    if (fresh) names.push_back(name);
    return it->second;
  }
  int find(const std::string& name) const {
    auto it = index.find(name);
    return it == index.end() ? -1 : it->second;
  }
};

inline void collect_expr_vars(const Expr& e, std::vector<std::string>& out) {
  if (e.kind == Expr::Kind::Variable) out.push_back(e.variable);
  if (e.kind == Expr::Kind::Time) out.push_back(e.time.variable);
  for (const auto& c : e.children) collect_expr_vars(*c, out);
}

/// Conjunctive pattern matcher with filters applied as soon as their
/// variables are bound.
class Evaluator {
 public:
  Evaluator(const TpmGraph& g, const EvalOptions& opt, bool inherited) : g_(g), opt_(opt) {
    hidden_.assign(g.node_slot_count(), 0);
    for (const auto& id : opt.hidden) {
      const std::size_t s = g.slot_of(id);
      if (s != TpmGraph::npos) hidden_[s] = 1;
    }
    if (inherited) build_inherited();
  }

  const TpmGraph& graph() const { return g_; }

  bool node_visible(std::size_t s) const { return g_.node_at(s) != nullptr && !hidden_[s]; }
  bool edge_visible(std::size_t e) const {
    return g_.edge_at(e) != nullptr && !hidden_[g_.edge_source_slot(e)] && !hidden_[g_.edge_target_slot(e)];
  }

  /// Enumerates solutions; `emit` returns false to stop.
  template <typename Emit>
  void solve(const std::vector<TriplePattern>& patterns, const std::vector<ExprPtr>& filters,
             VarTable& vars, Emit&& emit) {
    compiled_.clear();
    for (const auto& p : patterns) compiled_.push_back(compile(p, vars));
    cfilters_.clear();
    for (const auto& f : filters) {
      CFilter cf{f, {}};
      std::vector<std::string> names;
      collect_expr_vars(*f, names);
      for (const auto& n : names) cf.vars.push_back(vars.add(n));
      cfilters_.push_back(std::move(cf));
    }
    Binding b(vars.names.size());
    std::vector<char> used(compiled_.size(), 0);
    std::vector<char> applied(cfilters_.size(), 0);
    if (!apply_filters(b, applied, nullptr)) return;
    stop_ = false;
    recurse(b, used, applied, compiled_.size(), emit);
  }

  bool eval_filter(const Expr& e, const Binding& b) const {
    switch (e.kind) {
      case Expr::Kind::Or: return eval_filter(*e.children[0], b) || eval_filter(*e.children[1], b);
      case Expr::Kind::And: return eval_filter(*e.children[0], b) && eval_filter(*e.children[1], b);
      case Expr::Kind::Not: return !eval_filter(*e.children[0], b);
      case Expr::Kind::Compare: {
        const Value lhs = operand(*e.children[0], b);
        const Value rhs = operand(*e.children[1], b);
        return compare(lhs, rhs, e.op, e.pos);
      }
      case Expr::Kind::Time: return eval_time(e, b);
      case Expr::Kind::Variable:
      case Expr::Kind::Constant:
        throw Error(ErrorCode::TypeError, "filter operand " + print_expr(e) + " is not a condition", e.pos);
    }
    return false;
  }

 private:
  struct CTerm {
    bool is_var = false;
    int var = -1;
    Literal literal;
    std::size_t node_slot = TpmGraph::npos;  // constant resolved to a node
    std::size_t edge_slot = TpmGraph::npos;  // constant resolved to an edge
  };
  struct CPattern {
    CTerm s, o;
    bool attribute = false;
    std::string key;  // lower case
    bool fold_case = false;
    Relation rel = Relation::Used;
  };
  struct CFilter {
    ExprPtr expr;
    std::vector<int> vars;
  };
  struct Virtual {
    std::size_t from, to;
    Relation rel;
  };

  CTerm compile_term(const Term& t, VarTable& vars) const {
    CTerm c;
    if (t.is_variable) {
      c.is_var = true;
      c.var = vars.add(t.name);
      return c;
    }
    c.literal = t.literal;
    const std::string txt = t.literal.type == Literal::Type::Text ? t.literal.text : std::string();
    if (!txt.empty()) {
      const std::size_t s = g_.slot_of(txt);
      if (s != TpmGraph::npos && !hidden_[s]) c.node_slot = s;
      if (const EdgeRecord* e = g_.find_edge(txt)) {
        for (std::size_t es : g_.out_slots(g_.slot_of(e->from)))
          if (g_.edge_at(es) == e && edge_visible(es)) c.edge_slot = es;
      }
    }
    return c;
  }

  CPattern compile(const TriplePattern& p, VarTable& vars) const {
    CPattern c;
    c.s = compile_term(p.subject, vars);
    c.o = compile_term(p.object, vars);
    c.attribute = p.is_attribute;
    if (p.is_attribute) {
      c.key = to_lower(p.predicate);
      c.fold_case = c.key == "isa" || c.key == "label";
    } else {
      c.rel = *parse_relation(p.predicate);
    }
    return c;
  }

  void build_inherited() {
    for (std::size_t s = 0; s < g_.node_slot_count(); ++s) {
      const NodeRecord* n = g_.node_at(s);
      if (n == nullptr || !is_container(n->kind) || hidden_[s]) continue;
      for (const auto& e : g_.inherited_causal_edges(n->node_id)) {
        const std::size_t f = g_.slot_of(e.from), t = g_.slot_of(e.to);
        if (hidden_[f] || hidden_[t]) continue;
        if (g_.contains_edge(edge_key(e))) continue;
        virtual_.push_back({f, t, e.relation});
      }
    }
  }

  bool term_bound(const CTerm& t, const Binding& b) const { return !t.is_var || b[t.var].has_value(); }

  int cost(const CPattern& p, const Binding& b) const {
    const bool sb = term_bound(p.s, b), ob = term_bound(p.o, b);
    if (p.attribute) {
      if (sb) return 1;
      if (ob) return 3;
      return 5;
    }
    if (sb || ob) return 2;
    return 4;
  }

  bool bind(const CTerm& t, const Value& v, Binding& b, std::vector<int>& newly) const {
    if (!t.is_var) return false;  // callers handle constants
    auto& slot = b[t.var];
    if (slot) return values_equal(g_, *slot, v);
    slot = v;
    newly.push_back(t.var);
    return true;
  }

  /// Value of a bound term, or the constant as a node/edge/literal.
  std::optional<Value> term_value(const CTerm& t, const Binding& b) const {
    if (t.is_var) return b[t.var];
    return from_literal(t.literal);
  }

  bool apply_filters(const Binding& b, std::vector<char>& applied, std::vector<int>* newly_applied) const {
    for (std::size_t i = 0; i < cfilters_.size(); ++i) {
      if (applied[i]) continue;
      const auto& f = cfilters_[i];
      if (!std::all_of(f.vars.begin(), f.vars.end(), [&](int v) { return b[v].has_value(); })) continue;
      applied[i] = 1;
      if (newly_applied) newly_applied->push_back(static_cast<int>(i));
      if (!eval_filter(*f.expr, b)) return false;
    }
    return true;
  }

  template <typename Emit>
  void recurse(Binding& b, std::vector<char>& used, std::vector<char>& applied, std::size_t remaining,
               Emit& emit) {
    if (stop_) return;
    if (remaining == 0) {
      if (!emit(static_cast<const Binding&>(b))) stop_ = true;
      return;
    }
    std::size_t best = compiled_.size();
    int best_cost = 1 << 30;
    for (std::size_t i = 0; i < compiled_.size(); ++i) {
      if (used[i]) continue;
      const int c = cost(compiled_[i], b);
      if (c < best_cost) {
        best_cost = c;
        best = i;
      }
    }
    used[best] = 1;
    const CPattern& p = compiled_[best];
    auto step = [&](auto&& try_bind) {
      std::vector<int> newly;
      std::vector<int> filters_now;
      if (try_bind(newly) && apply_filters(b, applied, &filters_now)) {
        recurse(b, used, applied, remaining - 1, emit);
      }
      for (int v : newly) b[v].reset();
      for (int f : filters_now) applied[f] = 0;
    };

    if (p.attribute) {
      auto with_subject = [&](const Value& subject) {
        std::optional<Value> v;
        if (subject.type == Value::Type::Node) v = node_attribute(*g_.node_at(subject.slot), p.key);
        else if (subject.type == Value::Type::Edge) v = edge_attribute(*g_.edge_at(subject.slot), p.key);
        if (!v) return;
        step([&](std::vector<int>& newly) {
          if (p.s.is_var && !b[p.s.var]) {
            b[p.s.var] = subject;
            newly.push_back(p.s.var);
          }
          if (!p.o.is_var) return matches_literal(g_, *v, p.o.literal, p.fold_case);
          const auto& cur = b[p.o.var];
          if (cur) {
            if (p.fold_case && cur->type == Value::Type::Text && v->type == Value::Type::Text) {
              return iequals(cur->text, v->text);
            }
            return values_equal(g_, *cur, *v);
          }
          return bind(p.o, *v, b, newly);
        });
      };
      if (p.s.is_var && b[p.s.var]) {
        with_subject(*b[p.s.var]);
      } else if (!p.s.is_var) {
        if (p.s.node_slot != TpmGraph::npos) with_subject(Value::node(p.s.node_slot));
        if (p.s.edge_slot != TpmGraph::npos) with_subject(Value::edge(p.s.edge_slot));
      } else {
        for (std::size_t s = 0; s < g_.node_slot_count() && !stop_; ++s)
          if (node_visible(s)) with_subject(Value::node(s));
        for (std::size_t e = 0; e < g_.edge_slot_count() && !stop_; ++e)
          if (edge_visible(e)) with_subject(Value::edge(e));
      }
    } else {
      auto node_of = [&](const CTerm& t) -> std::optional<std::size_t> {
        if (t.is_var) {
          if (!b[t.var]) return std::nullopt;
          if (b[t.var]->type != Value::Type::Node) return TpmGraph::npos;
          return b[t.var]->slot;
        }
        return t.node_slot;
      };
      const auto from = node_of(p.s);
      const auto to = node_of(p.o);
      auto try_pair = [&](std::size_t f, std::size_t t) {
        step([&](std::vector<int>& newly) {
          if (p.s.is_var && !bind(p.s, Value::node(f), b, newly)) return false;
          if (p.o.is_var && !bind(p.o, Value::node(t), b, newly)) return false;
          return true;
        });
      };
      if (from && *from == TpmGraph::npos) {
      } else if (to && *to == TpmGraph::npos) {
      } else if (from) {
        for (std::size_t e : g_.out_slots(*from)) {
          if (stop_) break;
          if (!edge_visible(e) || g_.edge_at(e)->relation != p.rel) continue;
          const std::size_t t = g_.edge_target_slot(e);
          if (to && *to != t) continue;
          try_pair(*from, t);
        }
        for (const auto& v : virtual_)
          if (v.from == *from && v.rel == p.rel && (!to || *to == v.to)) try_pair(v.from, v.to);
      } else if (to) {
        for (std::size_t e : g_.in_slots(*to)) {
          if (stop_) break;
          if (!edge_visible(e) || g_.edge_at(e)->relation != p.rel) continue;
          try_pair(g_.edge_source_slot(e), *to);
        }
        for (const auto& v : virtual_)
          if (v.to == *to && v.rel == p.rel) try_pair(v.from, v.to);
      } else {
        for (std::size_t e = 0; e < g_.edge_slot_count() && !stop_; ++e) {
          if (!edge_visible(e) || g_.edge_at(e)->relation != p.rel) continue;
          try_pair(g_.edge_source_slot(e), g_.edge_target_slot(e));
        }
        for (const auto& v : virtual_)
          if (v.rel == p.rel) try_pair(v.from, v.to);
      }
    }
    used[best] = 0;
  }

  Value operand(const Expr& e, const Binding& b) const {
    if (e.kind == Expr::Kind::Variable) return *b[var_index(e.variable)];
    if (e.kind == Expr::Kind::Constant) return from_literal(e.literal);
    throw Error(ErrorCode::TypeError, "expected a value, got a condition", e.pos);
  }

  int var_index(const std::string& name) const {
    auto it = vars_->index.find(name);
    return it->second;
  }

  bool compare(const Value& a, const Value& b, CompareOp op, Position pos) const {
    int c = 0;
    const bool an = is_numeric_type(a), bn = is_numeric_type(b);
    if (an || bn) {
      auto x = as_number(a);
      auto y = as_number(b);
      if (!x || !y) {
        throw Error(ErrorCode::TypeError,
                    "cannot compare " + render(g_, a) + " with " + render(g_, b), pos);
      }
      c = *x < *y ? -1 : (*x > *y ? 1 : 0);
    } else {
      const std::string x = render(g_, a), y = render(g_, b);
      c = x < y ? -1 : (x > y ? 1 : 0);
    }
    switch (op) {
      case CompareOp::Eq: return c == 0;
      case CompareOp::Ne: return c != 0;
      case CompareOp::Lt: return c < 0;
      case CompareOp::Le: return c <= 0;
      case CompareOp::Gt: return c > 0;
      case CompareOp::Ge: return c >= 0;
    }
    return false;
  }

  bool eval_time(const Expr& e, const Binding& b) const {
    const Value& v = *b[var_index(e.time.variable)];
    const Interval iv = bind_slots(e.time.slots, opt_.time);
    switch (v.type) {
      case Value::Type::Integer:
      case Value::Type::Time: return time_filter(Timestamp{v.number}, iv);
      case Value::Type::Node: {
        const NodeRecord& n = *g_.node_at(v.slot);
        if (is_container(n.kind)) return time_filter(n.time(), n.end_time(), iv);
        return time_filter(n.time(), iv);
      }
      default:
        throw Error(ErrorCode::TypeError,
                    "?" + e.time.variable + " is bound to '" + render(g_, v) + "', not a time or node",
                    e.pos);
    }
  }

 public:
  void set_vars(const VarTable* vars) { vars_ = vars; }

 private:
  const TpmGraph& g_;
  const EvalOptions& opt_;
  std::vector<char> hidden_;
  std::vector<Virtual> virtual_;
  std::vector<CPattern> compiled_;
  std::vector<CFilter> cfilters_;
  const VarTable* vars_ = nullptr;
  bool stop_ = false;
};

/// Runs a conjunctive query and returns raw bindings plus the var table.
template <typename Emit>
void run_conjunctive(Evaluator& ev, const std::vector<TriplePattern>& patterns,
                     const std::vector<ExprPtr>& filters, VarTable& vars, Emit&& emit) {
  // Register pattern variables first so star projections follow pattern order.
  for (const auto& p : patterns) {
    if (p.subject.is_variable) vars.add(p.subject.name);
    if (p.object.is_variable) vars.add(p.object.name);
  }
  for (const auto& f : filters) {
    std::vector<std::string> names;
    collect_expr_vars(*f, names);
    for (const auto& n : names) vars.add(n);
  }
  ev.set_vars(&vars);
  ev.solve(patterns, filters, vars, emit);
}

inline bool is_declaration(const TriplePattern& p, const std::string& container_var) {
  return !container_var.empty() && p.subject.is_variable && p.subject.name == container_var;
}

inline std::vector<TriplePattern> body_patterns(const Query& q) {
  std::vector<TriplePattern> out;
  for (const auto& p : q.patterns)
    if (!is_declaration(p, q.container_var)) out.push_back(p);
  return out;
}

}  // namespace detail

/// Evaluates the pattern/filter body of a select and projects it.
inline BindingSet eval_select(const TpmGraph& g, const Query& q, const EvalOptions& opt = {}) {
  if (q.kind != StatementKind::Select && q.kind != StatementKind::Fconstruct) {
    throw Error(ErrorCode::SyntaxError, "eval_select needs a select statement");
  }
  detail::Evaluator ev(g, opt, q.inherited);
  detail::VarTable vars;
  const auto patterns = detail::body_patterns(q);

  std::vector<int> cols;
  BindingSet out;
  auto project = [&] {
    if (q.projection == Query::Projection::Variables) {
      for (const auto& v : q.variables) {
        cols.push_back(vars.find(v));
        out.columns.push_back(v);
      }
    } else {
      for (std::size_t i = 0; i < vars.names.size(); ++i) {
        if (vars.names[i] == q.container_var) continue;
        cols.push_back(static_cast<int>(i));
        out.columns.push_back(vars.names[i]);
      }
    }
  };
  std::set<std::vector<Cell>> seen;
  bool projected = false;
  detail::run_conjunctive(ev, patterns, q.filters, vars, [&](const detail::Binding& b) {
    if (!projected) {
      project();
      projected = true;
    }
    std::vector<Cell> row;
    row.reserve(cols.size());
    for (int c : cols) {
      if (c < 0 || !b[c]) {
        row.push_back({Value::Type::Text, ""});
      } else {
        row.push_back({b[c]->type, detail::render(g, *b[c])});
      }
    }
    if (q.all || seen.insert(row).second) {
      out.rows.push_back(std::move(row));
      out.path_index.emplace_back();
    }
    return true;
  });
  if (!projected) project();
  return out;
}

// --- path matching ------------------------------------------------------------

namespace detail {

/// Thompson automaton over path terms with node/edge parity per state.
struct Nfa {
  struct Arc {
    std::size_t term;  // index into terms
    std::size_t to;
  };
  struct State {
    std::vector<std::size_t> eps;
    std::vector<Arc> arcs;
    int parity = -1;
  };
  std::vector<State> states;
  std::vector<Term> terms;
  std::vector<bool> term_is_edge;
  std::size_t start = 0, accept = 0;

  std::size_t add_state() {
    states.emplace_back();
    return states.size() - 1;
  }

  std::pair<std::size_t, std::size_t> build(const Regex& r) {
    switch (r.kind) {
      case Regex::Kind::Term: {
        const std::size_t s = add_state(), a = add_state();
        terms.push_back(r.term);
        states[s].arcs.push_back({terms.size() - 1, a});
        return {s, a};
      }
      case Regex::Kind::Seq: {
        auto [s, a] = build(*r.children[0]);
        for (std::size_t i = 1; i < r.children.size(); ++i) {
          auto [s2, a2] = build(*r.children[i]);
          states[a].eps.push_back(s2);
          a = a2;
        }
        return {s, a};
      }
      case Regex::Kind::Alt: {
        const std::size_t s = add_state(), a = add_state();
        for (const auto& c : r.children) {
          auto [cs, ca] = build(*c);
          states[s].eps.push_back(cs);
          states[ca].eps.push_back(a);
        }
        return {s, a};
      }
      case Regex::Kind::Opt:
      case Regex::Kind::Star: {
        const std::size_t s = add_state(), a = add_state();
        auto [cs, ca] = build(*r.children[0]);
        states[s].eps.push_back(cs);
        states[s].eps.push_back(a);
        states[ca].eps.push_back(a);
        if (r.kind == Regex::Kind::Star) states[ca].eps.push_back(cs);
        return {s, a};
      }
      case Regex::Kind::Plus: {
        const std::size_t a = add_state();
        auto [cs, ca] = build(*r.children[0]);
        states[ca].eps.push_back(cs);
        states[ca].eps.push_back(a);
        return {cs, a};
      }
    }
    return {0, 0};
  }

  explicit Nfa(const Regex& r) {
    auto [s, a] = build(r);
    start = s;
    accept = a;
    term_is_edge.assign(terms.size(), false);
    // Parity: number of terms consumed mod 2. Even positions are nodes.
    std::vector<std::size_t> stack{start};
    states[start].parity = 0;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const int p = states[cur].parity;
      auto visit = [&](std::size_t next, int parity) {
        if (states[next].parity == -1) {
          states[next].parity = parity;
          stack.push_back(next);
        } else if (states[next].parity != parity) {
          throw Error(ErrorCode::SyntaxError,
                      "path expression does not alternate node and edge terms consistently");
        }
      };
      for (std::size_t e : states[cur].eps) visit(e, p);
      for (const auto& arc : states[cur].arcs) {
        term_is_edge[arc.term] = p == 1;
        visit(arc.to, 1 - p);
      }
    }
    if (states[accept].parity != 1) {
      throw Error(ErrorCode::SyntaxError, "path expression must start and end with a node term");
    }
  }

  using StateSet = std::vector<char>;

  void close(StateSet& set) const {
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < set.size(); ++i)
      if (set[i]) stack.push_back(i);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      for (std::size_t e : states[cur].eps) {
        if (!set[e]) {
          set[e] = 1;
          stack.push_back(e);
        }
      }
    }
  }

  StateSet initial() const {
    StateSet s(states.size(), 0);
    s[start] = 1;
    close(s);
    return s;
  }

  template <typename Accepts>
  bool step(const StateSet& from, StateSet& to, Accepts&& accepts) const {
    to.assign(states.size(), 0);
    bool any = false;
    for (std::size_t i = 0; i < from.size(); ++i) {
      if (!from[i]) continue;
      for (const auto& arc : states[i].arcs) {
        if (!to[arc.to] && accepts(arc.term)) {
          to[arc.to] = 1;
          any = true;
        }
      }
    }
    if (any) close(to);
    return any;
  }
};

/// Keeps matches that are not a proper contiguous part of another match.
inline std::vector<GraphPath> maximal_only(std::vector<GraphPath> matches) {
  auto encode = [](const GraphPath& p, std::size_t from, std::size_t to) {
    std::string key;
    for (std::size_t i = from; i <= to; ++i) {
      key += p.nodes[i];
      key += '\x1f';
      if (i < to) {
        key += p.edges[i];
        key += '\x1f';
      }
    }
    return key;
  };
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < matches.size(); ++i) index.emplace(encode(matches[i], 0, matches[i].nodes.size() - 1), i);
  std::vector<char> dominated(matches.size(), 0);
  for (const auto& m : matches) {
    const std::size_t n = m.nodes.size();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a; b < n; ++b) {
        if (a == 0 && b == n - 1) continue;
        auto it = index.find(encode(m, a, b));
        if (it != index.end()) dominated[it->second] = 1;
      }
    }
  }
  std::vector<GraphPath> out;
  for (std::size_t i = 0; i < matches.size(); ++i)
    if (!dominated[i]) out.push_back(std::move(matches[i]));
  return out;
}

}  // namespace detail

/// Candidate constraint of one path variable: nullopt accepts anything.
using Candidates = std::optional<std::unordered_set<std::size_t>>;

/// Evaluates a pconstruct's path specification. Returns maximal matching
/// simple paths in golden order.
inline std::vector<GraphPath> match_paths(const TpmGraph& g, const Query& q, const EvalOptions& opt = {}) {
  if (q.kind != StatementKind::Pconstruct || !q.path) {
    throw Error(ErrorCode::SyntaxError, "match_paths needs a pconstruct statement");
  }
  const PathSpec& spec = *q.path;
  detail::Nfa nfa(*spec.regex);

  // Roles of path variables.
  std::map<std::string, bool> role;  // var -> is_edge
  for (std::size_t i = 0; i < nfa.terms.size(); ++i) {
    const Term& t = nfa.terms[i];
    if (!t.is_variable) {
      if (nfa.term_is_edge[i]) {
        if (t.literal.type != Literal::Type::Text || !parse_relation(t.literal.text)) {
          throw Error(ErrorCode::RegexUnsatisfiable,
                      "edge term " + print_term(t) + " is not a relation name");
        }
      }
      continue;
    }
    auto [it, fresh] = role.emplace(t.name, nfa.term_is_edge[i]);
    if (!fresh && it->second != nfa.term_is_edge[i]) {
      throw Error(ErrorCode::RegexUnsatisfiable, "?" + t.name + " is used as both a node and an edge");
    }
  }
  for (const auto* end : {&spec.start, &spec.end}) {
    if (*end && end->value().is_variable) {
      auto [it, fresh] = role.emplace(end->value().name, false);
      if (!fresh && it->second) {
        throw Error(ErrorCode::RegexUnsatisfiable, "?" + it->first + " is an endpoint and an edge");
      }
    }
  }

  const auto patterns = detail::body_patterns(q);

  // Static contradictions: conflicting constants and role/@isA mismatches.
  std::map<std::pair<std::string, std::string>, Literal> constants;
  for (const auto& p : patterns) {
    if (!p.subject.is_variable || !p.is_attribute || p.object.is_variable) continue;
    const std::string key = to_lower(p.predicate);
    auto [it, fresh] = constants.emplace(std::make_pair(p.subject.name, key), p.object.literal);
    const bool fold = key == "isa" || key == "label";
    if (!fresh) {
      const Literal& a = it->second;
      const Literal& b = p.object.literal;
      const bool same = a.type == b.type && (fold ? iequals(a.text, b.text) : a.text == b.text) &&
                        a.number == b.number;
      if (!same) {
        throw Error(ErrorCode::RegexUnsatisfiable,
                    "?" + p.subject.name + " @" + p.predicate + " has conflicting constants", p.pos);
      }
    }
    auto r = role.find(p.subject.name);
    if (r != role.end() && key == "isa") {
      const bool says_edge = iequals(p.object.literal.text, "edge");
      if (says_edge != r->second) {
        throw Error(ErrorCode::RegexUnsatisfiable,
                    "?" + p.subject.name + " is used as " + (r->second ? "an edge" : "a node") +
                        " but declared @isA " + p.object.literal.text,
                    p.pos);
      }
    }
  }

  // Split the body into connected components over shared variables.
  const std::size_t np = patterns.size(), nf = q.filters.size();
  std::vector<std::vector<std::string>> item_vars(np + nf);
  for (std::size_t i = 0; i < np; ++i) {
    if (patterns[i].subject.is_variable) item_vars[i].push_back(patterns[i].subject.name);
    if (patterns[i].object.is_variable) item_vars[i].push_back(patterns[i].object.name);
  }
  for (std::size_t i = 0; i < nf; ++i) detail::collect_expr_vars(*q.filters[i], item_vars[np + i]);
  std::vector<std::size_t> parent(np + nf);
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < item_vars.size(); ++i) {
    for (const auto& v : item_vars[i]) {
      auto [it, fresh] = owner.emplace(v, i);
      if (!fresh) parent[find(i)] = find(it->second);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < item_vars.size(); ++i) components[find(i)].push_back(i);

  detail::Evaluator ev(g, opt, false);
  std::map<std::string, Candidates> candidates;
  for (const auto& [v, _] : role) candidates[v] = std::nullopt;

  for (const auto& [root, items] : components) {
    std::vector<TriplePattern> cp;
    std::vector<ExprPtr> cf;
    std::set<std::string> cvars;
    for (std::size_t i : items) {
      if (i < np) cp.push_back(patterns[i]);
      else cf.push_back(q.filters[i - np]);
      cvars.insert(item_vars[i].begin(), item_vars[i].end());
    }
    std::vector<std::string> path_vars;
    for (const auto& v : cvars)
      if (role.count(v)) path_vars.push_back(v);
    if (path_vars.size() > 1) {
      throw Error(ErrorCode::UnsupportedPattern,
                  "a constraint links path variables ?" + path_vars[0] + " and ?" + path_vars[1]);
    }
    detail::VarTable vars;
    if (path_vars.empty()) {
      bool any = false;
      detail::run_conjunctive(ev, cp, cf, vars, [&](const detail::Binding&) {
        any = true;
        return false;
      });
      if (!any) return {};
      continue;
    }
    const std::string& pv = path_vars[0];
    const bool want_edge = role[pv];
    std::unordered_set<std::size_t> set;
    detail::run_conjunctive(ev, cp, cf, vars, [&](const detail::Binding& b) {
      const auto& v = b[vars.find(pv)];
      if (v && v->type == (want_edge ? Value::Type::Edge : Value::Type::Node)) set.insert(v->slot);
      return true;
    });
    candidates[pv] = std::move(set);
  }

  auto accepts_node = [&](const Term& t, std::size_t slot) {
    if (!t.is_variable) return t.literal.type == Literal::Type::Text && g.node_at(slot)->node_id == t.literal.text;
    const auto& c = candidates[t.name];
    return !c || c->count(slot) != 0;
  };
  auto accepts_edge = [&](const Term& t, std::size_t slot) {
    if (!t.is_variable) return iequals(to_string(g.edge_at(slot)->relation), t.literal.text);
    const auto& c = candidates[t.name];
    return !c || c->count(slot) != 0;
  };

  std::vector<GraphPath> matches;
  std::vector<std::size_t> node_stack, edge_stack;
  std::vector<char> on_path(g.node_slot_count(), 0);
  const std::size_t max_len = opt.max_path_len.value_or(static_cast<std::size_t>(-1));

  auto end_ok = [&](std::size_t slot) { return !spec.end || accepts_node(*spec.end, slot); };
  std::vector<detail::Nfa::StateSet> scratch;

  auto dfs = [&](auto&& self, const detail::Nfa::StateSet& states) -> void {
    const std::size_t cur = node_stack.back();
    if (states[nfa.accept] && end_ok(cur)) {
      GraphPath p;
      for (std::size_t s : node_stack) p.nodes.push_back(g.node_at(s)->node_id);
      for (std::size_t e : edge_stack) p.edges.push_back(edge_key(*g.edge_at(e)));
      matches.push_back(std::move(p));
    }
    if (edge_stack.size() >= max_len) return;
    detail::Nfa::StateSet after_edge, after_node;
    for (std::size_t e : g.out_slots(cur)) {
      if (!ev.edge_visible(e)) continue;
      const std::size_t next = g.edge_target_slot(e);
      if (on_path[next]) continue;
      if (!nfa.step(states, after_edge, [&](std::size_t t) { return accepts_edge(nfa.terms[t], e); })) continue;
      if (!nfa.step(after_edge, after_node, [&](std::size_t t) { return accepts_node(nfa.terms[t], next); })) continue;
      on_path[next] = 1;
      node_stack.push_back(next);
      edge_stack.push_back(e);
      self(self, after_node);
      node_stack.pop_back();
      edge_stack.pop_back();
      on_path[next] = 0;
    }
  };

  const auto init = nfa.initial();
  for (std::size_t s = 0; s < g.node_slot_count(); ++s) {
    if (!ev.node_visible(s)) continue;
    if (spec.start && !accepts_node(*spec.start, s)) continue;
    detail::Nfa::StateSet first;
    if (!nfa.step(init, first, [&](std::size_t t) { return accepts_node(nfa.terms[t], s); })) continue;
    on_path[s] = 1;
    node_stack.assign(1, s);
    edge_stack.clear();
    dfs(dfs, first);
    on_path[s] = 0;
  }

  auto out = detail::maximal_only(std::move(matches));
  std::sort(out.begin(), out.end(), path_less);
  return out;
}

// --- constructs -----------------------------------------------------------------

/// What a fconstruct/pconstruct asks the engine to materialize.
struct ConstructResult {
  NodeKind kind = NodeKind::FolderNode;
  std::string name;
  std::vector<std::string> members;  // first-seen order
  std::vector<GraphPath> paths;      // pconstruct only
  Attributes attributes;             // declared container attributes
  bool timed = false;
  std::optional<Timestamp> declared_start;
  std::optional<std::uint64_t> declared_duration;
  bool push_mode = false;
  std::uint64_t interval = 1;
};

/// Reads the container declarations (`?c @key value`) of a construct.
inline void read_declarations(const Query& q, ConstructResult& r) {
  for (const auto& p : q.patterns) {
    if (!detail::is_declaration(p, q.container_var)) continue;
    const std::string key = to_lower(p.predicate);
    const Literal& v = p.object.literal;
    if (key == "isa") continue;
    if (key == "timed") {
      r.timed = iequals(v.text, "true");
    } else if (key == "start") {
      r.declared_start = Timestamp{v.number};
    } else if (key == "duration") {
      r.declared_duration = v.number;
    } else if (key == "mode") {
      r.push_mode = iequals(v.text, "push");
    } else if (key == "interval") {
      r.interval = v.number;
    } else {
      r.attributes[p.predicate] = v.type == Literal::Type::Text ? v.text : print_literal(v);
    }
  }
}

inline ConstructResult eval_construct(const TpmGraph& g, const Query& q, const EvalOptions& opt = {}) {
  ConstructResult r;
  r.name = q.target;
  read_declarations(q, r);
  if (q.kind == StatementKind::Pconstruct) {
    r.kind = NodeKind::PathNode;
    r.paths = match_paths(g, q, opt);
    std::set<std::string> seen;
    for (const auto& p : r.paths)
      for (const auto& n : p.nodes)
        if (seen.insert(n).second) r.members.push_back(n);
    return r;
  }
  if (q.kind != StatementKind::Fconstruct) {
    throw Error(ErrorCode::SyntaxError, "eval_construct needs fconstruct or pconstruct");
  }
  r.kind = NodeKind::FolderNode;
  const BindingSet rows = eval_select(g, q, opt);
  if (q.projection == Query::Projection::Folders) {
    if (rows.empty() && !detail::body_patterns(q).empty()) return r;
    for (const auto& f : q.folders) {
      const NodeRecord* n = g.find(f);
      if (n == nullptr || !is_container(n->kind) || opt.hidden.count(f) != 0) {
        throw Error(ErrorCode::UnknownContainer, "no folder or path node named '" + f + "'");
      }
      if (std::find(r.members.begin(), r.members.end(), f) == r.members.end()) r.members.push_back(f);
    }
    return r;
  }
  std::set<std::string> seen;
  for (const auto& row : rows.rows)
    for (const auto& cell : row)
      if (cell.type == Value::Type::Node && seen.insert(cell.text).second) r.members.push_back(cell.text);
  return r;
}

}  // namespace tpm::query
