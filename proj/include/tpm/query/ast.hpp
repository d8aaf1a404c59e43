#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/query/time_semantics.hpp"

namespace tpm::query {

struct Literal {
  enum class Type { Text, Integer, Time };
  Type type = Type::Text;
  std::string text;          // Text
  std::uint64_t number = 0;  // Integer, Time

  static Literal make_text(std::string s) { return {Type::Text, std::move(s), 0}; }
  static Literal make_integer(std::uint64_t n) { return {Type::Integer, {}, n}; }
  static Literal make_time(std::uint64_t t) { return {Type::Time, {}, t}; }

  bool operator==(const Literal&) const = default;
};

/// Variable (`?name`) or constant.
struct Term {
  bool is_variable = false;
  std::string name;  // variable name without '?'
  Literal literal;

  static Term variable(std::string n) { return {true, std::move(n), {}}; }
  static Term constant(Literal l) { return {false, {}, std::move(l)}; }

  bool operator==(const Term&) const = default;
};

struct TriplePattern {
  Term subject;
  /// Attribute name without '@' when is_attribute, else a relation name.
  std::string predicate;
  bool is_attribute = false;
  Term object;
  Position pos;

  bool operator==(const TriplePattern& o) const {
    return subject == o.subject && predicate == o.predicate && is_attribute == o.is_attribute &&
           object == o.object;
  }
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct TimeSemantic {
  std::string variable;
  std::array<Slot, 4> slots{};
  /// Set when written as keyword(?x, ...); args are kept for printing.
  std::string keyword;
  std::vector<Slot> args;

  bool operator==(const TimeSemantic&) const = default;
};

struct Expr {
  enum class Kind { Or, And, Not, Compare, Variable, Constant, Time };
  Kind kind = Kind::Constant;
  CompareOp op = CompareOp::Eq;
  std::vector<ExprPtr> children;
  std::string variable;
  Literal literal;
  TimeSemantic time;
  Position pos;

  bool operator==(const Expr& o) const {
    if (kind != o.kind || op != o.op || variable != o.variable || !(literal == o.literal) ||
        !(time == o.time) || children.size() != o.children.size()) {
      return false;
    }
    for (std::size_t i = 0; i < children.size(); ++i)
      if (!(*children[i] == *o.children[i])) return false;
    return true;
  }
};

struct Regex;
using RegexPtr = std::shared_ptr<const Regex>;

/// Path expression over alternating node and edge terms.
struct Regex {
  enum class Kind { Term, Seq, Alt, Opt, Plus, Star };
  Kind kind = Kind::Term;
  Term term;
  std::vector<RegexPtr> children;

  bool operator==(const Regex& o) const {
    if (kind != o.kind || !(term == o.term) || children.size() != o.children.size()) return false;
    for (std::size_t i = 0; i < children.size(); ++i)
      if (!(*children[i] == *o.children[i])) return false;
    return true;
  }
};

inline RegexPtr make_regex(Regex::Kind kind, std::vector<RegexPtr> children) {
  auto r = std::make_shared<Regex>();
  r->kind = kind;
  r->children = std::move(children);
  return r;
}

inline RegexPtr make_regex_term(Term t) {
  auto r = std::make_shared<Regex>();
  r->kind = Regex::Kind::Term;
  r->term = std::move(t);
  return r;
}

enum class StatementKind { Select, Fconstruct, Pconstruct, Apply };

struct PathSpec {
  std::optional<Term> start;
  std::optional<Term> end;
  RegexPtr regex;

  bool operator==(const PathSpec& o) const {
    if (!(start == o.start) || !(end == o.end)) return false;
    if (!regex || !o.regex) return regex == o.regex;
    return *regex == *o.regex;
  }
};

struct Query;
using QueryPtr = std::shared_ptr<const Query>;

struct Query {
  enum class Projection { Implicit, Star, Variables, Folders };

  StatementKind kind = StatementKind::Select;
  bool all = false;        // keep duplicate solutions
  bool inherited = false;  // match inherited folder/path causal edges
  std::string target;
  std::string container_var;
  Projection projection = Projection::Implicit;
  std::vector<std::string> variables;  // Projection::Variables
  std::vector<std::string> folders;    // Projection::Folders
  std::vector<TriplePattern> patterns;
  std::vector<ExprPtr> filters;
  std::optional<PathSpec> path;
  std::vector<std::string> scope;
  QueryPtr inner;

  bool operator==(const Query& o) const {
    if (kind != o.kind || all != o.all || inherited != o.inherited || target != o.target ||
        container_var != o.container_var || projection != o.projection ||
        variables != o.variables || folders != o.folders || patterns != o.patterns ||
        !(path == o.path) || scope != o.scope || filters.size() != o.filters.size()) {
      return false;
    }
    for (std::size_t i = 0; i < filters.size(); ++i)
      if (!(*filters[i] == *o.filters[i])) return false;
    if (!inner || !o.inner) return inner == o.inner;
    return *inner == *o.inner;
  }
};

}  // namespace tpm::query
