#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/model.hpp"
#include "tpm/query/ast.hpp"
#include "tpm/query/lexer.hpp"
#include "tpm/query/time_semantics.hpp"

namespace tpm::query {

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

  Query statement() {
    Query q;
    if (at(Tok::LParen)) {
      q = apply();
    } else if (at_word("select")) {
      q = select();
    } else if (at_word("fconstruct")) {
      q = fconstruct();
    } else if (at_word("pconstruct")) {
      q = pconstruct();
    } else {
      fail("expected select, fconstruct, pconstruct or '(' for apply");
    }
    expect(Tok::End, "end of query");
    return q;
  }

  RegexPtr standalone_regex() {
    if (at(Tok::End)) throw Error(ErrorCode::EmptyExpression, "empty path expression", cur().pos);
    RegexPtr r = regex_alt();
    expect(Tok::End, "end of path expression");
    return r;
  }

 private:
  // --- token helpers ------------------------------------------------------
  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t n) const {
    return toks_[std::min(pos_ + n, toks_.size() - 1)];
  }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_word(std::string_view w) const { return at(Tok::Word) && iequals(cur().text, w); }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }
  bool accept_word(std::string_view w) {
    if (!at_word(w)) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::SyntaxError, msg + " (found " + found() + ")", cur().pos);
  }
  std::string found() const {
    switch (cur().kind) {
      case Tok::Word: return "'" + cur().text + "'";
      case Tok::Var: return "'?" + cur().text + "'";
      case Tok::AtName: return "'@" + cur().text + "'";
      default: return std::string(describe(cur().kind));
    }
  }
  Token expect(Tok k, std::string_view what) {
    if (!at(k)) fail("expected " + std::string(what));
    return take();
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail("expected '" + std::string(w) + "'");
  }

  std::string name() {
    if (at(Tok::Word) || at(Tok::String)) {
      std::string n = take().text;
      if (!valid_node_id(n)) fail("invalid name '" + n + "'");
      return n;
    }
    fail("expected a name");
  }

  // --- statements ---------------------------------------------------------
  Query apply() {
    Query q;
    q.kind = StatementKind::Apply;
    expect(Tok::LParen, "'('");
    q.scope.push_back(name());
    while (accept(Tok::Comma)) q.scope.push_back(name());
    expect(Tok::RParen, "')'");
    expect_word("apply");
    expect(Tok::LParen, "'('");
    if (!at_word("select")) fail("apply body must be a select");
    q.inner = std::make_shared<const Query>(select());
    expect(Tok::RParen, "')'");
    return q;
  }

  void select_flags(Query& q) {
    for (;;) {
      if (accept_word("all")) q.all = true;
      else if (accept_word("inherited")) q.inherited = true;
      else break;
    }
  }

  Query select() {
    Query q;
    q.kind = StatementKind::Select;
    expect_word("select");
    select_flags(q);
    projection(q, false);
    where(q);
    check_bindings(q);
    return q;
  }

  void projection(Query& q, bool allow_folders) {
    if (accept(Tok::Star)) {
      q.projection = Query::Projection::Star;
    } else if (allow_folders && at(Tok::LParen)) {
      take();
      q.projection = Query::Projection::Folders;
      q.folders.push_back(name());
      while (accept(Tok::Comma)) q.folders.push_back(name());
      expect(Tok::RParen, "')'");
    } else if (at(Tok::Var)) {
      q.projection = Query::Projection::Variables;
      while (at(Tok::Var)) q.variables.push_back(take().text);
    } else {
      fail("expected '*' or variables after select");
    }
  }

  Query fconstruct() {
    Query q;
    q.kind = StatementKind::Fconstruct;
    expect_word("fconstruct");
    q.target = name();
    expect_word("as");
    q.container_var = expect(Tok::Var, "container variable").text;
    if (accept_word("select")) {
      select_flags(q);
      projection(q, true);
    }
    where(q);
    check_container(q, "folderNode");
    check_bindings(q);
    return q;
  }

  Query pconstruct() {
    Query q;
    q.kind = StatementKind::Pconstruct;
    expect_word("pconstruct");
    q.target = name();
    expect(Tok::LParen, "'(' before path specification");
    PathSpec spec;
    if (!at(Tok::Comma)) spec.start = term("start node");
    expect(Tok::Comma, "','");
    if (!at(Tok::Comma)) spec.end = term("end node");
    expect(Tok::Comma, "','");
    if (at(Tok::RParen)) throw Error(ErrorCode::EmptyExpression, "empty path expression", cur().pos);
    spec.regex = regex_alt();
    expect(Tok::RParen, "')' after path expression");
    q.path = std::move(spec);
    expect_word("as");
    q.container_var = expect(Tok::Var, "container variable").text;
    where(q);
    check_container(q, "pathNode");
    check_bindings(q);
    return q;
  }

  // --- where clause ---------------------------------------------------------
  void where(Query& q) {
    expect_word("where");
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) fail("expected '}'");
      if (at_word("filter") && ahead(1).kind == Tok::LParen) {
        take();
        take();
        q.filters.push_back(expr_or());
        expect(Tok::RParen, "')' closing filter");
      } else {
        q.patterns.push_back(pattern());
      }
      accept(Tok::Dot);
    }
    take();
  }

  Term term(std::string_view what) {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Var: return Term::variable(take().text);
      case Tok::Word:
      case Tok::String: return Term::constant(Literal::make_text(take().text));
      case Tok::Integer: return Term::constant(Literal::make_integer(take().number));
      case Tok::Time: return Term::constant(Literal::make_time(take().number));
      default: fail("expected " + std::string(what));
    }
  }

  TriplePattern pattern() {
    TriplePattern p;
    p.pos = cur().pos;
    p.subject = term("pattern subject");
    if (at(Tok::AtName)) {
      p.is_attribute = true;
      p.predicate = take().text;
    } else if (at(Tok::Word)) {
      const Token t = take();
      auto rel = parse_relation(t.text);
      if (!rel) throw Error(ErrorCode::UnknownRelation, "unknown relation '" + t.text + "'", t.pos);
      p.predicate = std::string(to_string(*rel));
    } else {
      fail("expected '@attribute' or relation name");
    }
    p.object = term("pattern object");
    return p;
  }

  // --- filter expressions ---------------------------------------------------
  static ExprPtr binary(Expr::Kind k, ExprPtr a, ExprPtr b, Position pos) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->children = {std::move(a), std::move(b)};
    e->pos = pos;
    return e;
  }

  ExprPtr expr_or() {
    ExprPtr lhs = expr_and();
    while (at(Tok::OrOr)) {
      const Position p = take().pos;
      lhs = binary(Expr::Kind::Or, lhs, expr_and(), p);
    }
    return lhs;
  }

  ExprPtr expr_and() {
    ExprPtr lhs = expr_unary();
    while (at(Tok::AndAnd)) {
      const Position p = take().pos;
      lhs = binary(Expr::Kind::And, lhs, expr_unary(), p);
    }
    return lhs;
  }

  ExprPtr expr_unary() {
    if (at(Tok::Bang)) {
      auto e = std::make_shared<Expr>();
      e->pos = take().pos;
      e->kind = Expr::Kind::Not;
      e->children = {expr_unary()};
      return e;
    }
    ExprPtr lhs = expr_primary();
    std::optional<CompareOp> op;
    switch (cur().kind) {
      case Tok::Eq: op = CompareOp::Eq; break;
      case Tok::Ne: op = CompareOp::Ne; break;
      case Tok::Lt: op = CompareOp::Lt; break;
      case Tok::Le: op = CompareOp::Le; break;
      case Tok::Gt: op = CompareOp::Gt; break;
      case Tok::Ge: op = CompareOp::Ge; break;
      default: break;
    }
    if (!op) return lhs;
    auto e = std::make_shared<Expr>();
    e->pos = take().pos;
    e->kind = Expr::Kind::Compare;
    e->op = *op;
    e->children = {lhs, expr_primary()};
    return e;
  }

  ExprPtr expr_primary() {
    auto e = std::make_shared<Expr>();
    e->pos = cur().pos;
    switch (cur().kind) {
      case Tok::LParen: {
        take();
        ExprPtr inner = expr_or();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Var:
        e->kind = Expr::Kind::Variable;
        e->variable = take().text;
        return e;
      case Tok::String:
        e->kind = Expr::Kind::Constant;
        e->literal = Literal::make_text(take().text);
        return e;
      case Tok::Integer:
        e->kind = Expr::Kind::Constant;
        e->literal = Literal::make_integer(take().number);
        return e;
      case Tok::Time:
        e->kind = Expr::Kind::Constant;
        e->literal = Literal::make_time(take().number);
        return e;
      case Tok::Word:
        if (ahead(1).kind == Tok::LParen) return call();
        e->kind = Expr::Kind::Constant;
        e->literal = Literal::make_text(take().text);
        return e;
      default:
        fail("expected an expression");
    }
  }

  Slot slot() {
    if (accept(Tok::Question)) return Slot::any();
    if (at(Tok::Integer) || at(Tok::Time)) return Slot::fixed(take().number);
    if (at_word("t")) {
      take();
      if (accept(Tok::Plus)) {
        if (!accept_word("d")) fail("expected 'd' after 't+'");
        return Slot::end();
      }
      return Slot::start();
    }
    fail("expected a time slot (?, tN, N, t or t+d)");
  }

  ExprPtr call() {
    const Token fn = take();
    expect(Tok::LParen, "'('");
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Time;
    e->pos = fn.pos;
    e->time.variable = expect(Tok::Var, "fact variable").text;
    if (iequals(fn.text, "timesemantic")) {
      expect(Tok::Comma, "','");
      const Position open = expect(Tok::LBracket, "'['").pos;
      std::vector<Slot> slots{slot()};
      while (accept(Tok::Comma)) slots.push_back(slot());
      expect(Tok::RBracket, "']'");
      if (slots.size() != 4) {
        throw Error(ErrorCode::ArityError,
                    "timesemantic interval needs 4 slots, got " + std::to_string(slots.size()), open);
      }
      std::copy(slots.begin(), slots.end(), e->time.slots.begin());
    } else if (is_time_keyword(fn.text)) {
      std::vector<Slot> args;
      while (accept(Tok::Comma)) args.push_back(slot());
      try {
        e->time.slots = instantiate(fn.text, args);
      } catch (const Error& err) {
        throw Error(err.code(), err.detail(), fn.pos);
      }
      e->time.keyword = to_lower(fn.text);
      e->time.args = std::move(args);
    } else {
      throw Error(ErrorCode::UnknownKeyword, "unknown filter function '" + fn.text + "'", fn.pos);
    }
    expect(Tok::RParen, "')'");
    return e;
  }

  // --- path expressions -----------------------------------------------------
  bool at_regex_atom() const {
    switch (cur().kind) {
      case Tok::Var:
      case Tok::Word:
      case Tok::String:
      case Tok::Integer:
      case Tok::Time:
      case Tok::LParen:
        return true;
      default:
        return false;
    }
  }

  RegexPtr regex_alt() {
    std::vector<RegexPtr> alts{regex_seq()};
    while (accept(Tok::Pipe)) alts.push_back(regex_seq());
    return alts.size() == 1 ? alts[0] : make_regex(Regex::Kind::Alt, std::move(alts));
  }

  RegexPtr regex_seq() {
    if (!at_regex_atom()) {
      if (at(Tok::RParen) || at(Tok::Pipe) || at(Tok::End)) {
        throw Error(ErrorCode::EmptyExpression, "empty path expression", cur().pos);
      }
      fail("expected a path term");
    }
    std::vector<RegexPtr> items;
    while (at_regex_atom()) items.push_back(regex_postfix());
    return items.size() == 1 ? items[0] : make_regex(Regex::Kind::Seq, std::move(items));
  }

  RegexPtr regex_postfix() {
    RegexPtr r = regex_atom();
    for (;;) {
      if (accept(Tok::Question)) r = make_regex(Regex::Kind::Opt, {r});
      else if (accept(Tok::Plus)) r = make_regex(Regex::Kind::Plus, {r});
      else if (accept(Tok::Star)) r = make_regex(Regex::Kind::Star, {r});
      else return r;
    }
  }

  RegexPtr regex_atom() {
    if (accept(Tok::LParen)) {
      RegexPtr inner = regex_alt();
      expect(Tok::RParen, "')'");
      return inner;
    }
    return make_regex_term(term("path term"));
  }

  // --- static checks ----------------------------------------------------------
  static void regex_vars(const Regex& r, std::set<std::string>& out) {
    if (r.kind == Regex::Kind::Term) {
      if (r.term.is_variable) out.insert(r.term.name);
      return;
    }
    for (const auto& c : r.children) regex_vars(*c, out);
  }

  static void expr_vars(const Expr& e, std::vector<std::pair<std::string, Position>>& out) {
    if (e.kind == Expr::Kind::Variable) out.emplace_back(e.variable, e.pos);
    if (e.kind == Expr::Kind::Time) out.emplace_back(e.time.variable, e.pos);
    for (const auto& c : e.children) expr_vars(*c, out);
  }

  static void check_bindings(const Query& q) {
    std::set<std::string> bound;
    for (const auto& p : q.patterns) {
      if (p.subject.is_variable) bound.insert(p.subject.name);
      if (p.object.is_variable) bound.insert(p.object.name);
    }
    if (q.path) {
      regex_vars(*q.path->regex, bound);
      if (q.path->start && q.path->start->is_variable) bound.insert(q.path->start->name);
      if (q.path->end && q.path->end->is_variable) bound.insert(q.path->end->name);
    }
    for (const auto& v : q.variables) {
      if (v == q.container_var && !q.container_var.empty()) {
        throw Error(ErrorCode::SyntaxError, "the container variable ?" + v + " cannot be selected");
      }
      if (bound.count(v) == 0) {
        throw Error(ErrorCode::UnboundVariable, "?" + v + " is selected but appears in no pattern");
      }
    }
    for (const auto& f : q.filters) {
      std::vector<std::pair<std::string, Position>> vars;
      expr_vars(*f, vars);
      for (const auto& [v, pos] : vars) {
        if (bound.count(v) == 0) {
          throw Error(ErrorCode::UnboundVariable, "?" + v + " is filtered but appears in no pattern", pos);
        }
      }
    }
  }

  static void check_container(const Query& q, std::string_view kind_name) {
    const std::string& cv = q.container_var;
    for (const auto& p : q.patterns) {
      const bool subject = p.subject.is_variable && p.subject.name == cv;
      const bool object = p.object.is_variable && p.object.name == cv;
      if (object || (subject && !p.is_attribute)) {
        throw Error(ErrorCode::SyntaxError,
                    "?" + cv + " may only appear as the subject of @attribute patterns", p.pos);
      }
      if (!subject) continue;
      if (p.object.is_variable) {
        throw Error(ErrorCode::SyntaxError, "attributes of ?" + cv + " must be constants", p.pos);
      }
      const std::string key = to_lower(p.predicate);
      const Literal& v = p.object.literal;
      auto text = [&] { return v.type == Literal::Type::Text ? v.text : std::string(); };
      if (key == "isa" && !iequals(text(), kind_name)) {
        throw Error(ErrorCode::SyntaxError,
                    "?" + cv + " @isA must be " + std::string(kind_name) + " here", p.pos);
      }
      if (key == "timed" && !iequals(text(), "true") && !iequals(text(), "false")) {
        throw Error(ErrorCode::SyntaxError, "@timed takes true or false", p.pos);
      }
      if ((key == "start" || key == "duration" || key == "interval") && v.type == Literal::Type::Text) {
        throw Error(ErrorCode::SyntaxError, "@" + p.predicate + " takes a number", p.pos);
      }
      if (key == "interval" && v.number == 0) {
        throw Error(ErrorCode::SyntaxError, "@interval must be positive", p.pos);
      }
      if (key == "mode" && !iequals(text(), "pull") && !iequals(text(), "push")) {
        throw Error(ErrorCode::SyntaxError, "@mode takes pull or push", p.pos);
      }
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Query parse_query(std::string_view text) { return detail::Parser(text).statement(); }

inline RegexPtr parse_path_regex(std::string_view text) {
  return detail::Parser(text).standalone_regex();
}

}  // namespace tpm::query
