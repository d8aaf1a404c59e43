#pragma once

#include <string>

#include "tpm/query/ast.hpp"
#include "tpm/query/lexer.hpp"

namespace tpm::query {

inline std::string print_text(const std::string& s) {
  if (s.find('\'') == std::string::npos && s.find('\n') == std::string::npos) return "'" + s + "'";
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

inline std::string print_literal(const Literal& l) {
  switch (l.type) {
    case Literal::Type::Text: return print_text(l.text);
    case Literal::Type::Integer: return std::to_string(l.number);
    case Literal::Type::Time: return "t" + std::to_string(l.number);
  }
  return {};
}

inline std::string print_term(const Term& t) {
  return t.is_variable ? "?" + t.name : print_literal(t.literal);
}

/// Names print bare when they lex back as one word.
inline std::string print_name(const std::string& n) {
  try {
    auto toks = tokenize(n);
    if (toks.size() == 2 && toks[0].kind == Tok::Word && toks[0].text == n) return n;
  } catch (const Error&) {
  }
  return print_text(n);
}

inline std::string print_slot(const Slot& s) {
  switch (s.kind) {
    case Slot::Kind::Any: return "?";
    case Slot::Kind::Fixed: return "t" + std::to_string(s.ticks);
    case Slot::Kind::Start: return "t";
    case Slot::Kind::End: return "t+d";
  }
  return "?";
}

inline std::string print_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Or:
      return "(" + print_expr(*e.children[0]) + " || " + print_expr(*e.children[1]) + ")";
    case Expr::Kind::And:
      return "(" + print_expr(*e.children[0]) + " && " + print_expr(*e.children[1]) + ")";
    case Expr::Kind::Not:
      return "!" + print_expr(*e.children[0]);
    case Expr::Kind::Compare: {
      static const char* ops[] = {"=", "!=", "<", "<=", ">", ">="};
      return "(" + print_expr(*e.children[0]) + " " + ops[static_cast<int>(e.op)] + " " +
             print_expr(*e.children[1]) + ")";
    }
    case Expr::Kind::Variable:
      return "?" + e.variable;
    case Expr::Kind::Constant:
      return print_literal(e.literal);
    case Expr::Kind::Time: {
      std::string out;
      if (!e.time.keyword.empty()) {
        out = e.time.keyword + "(?" + e.time.variable;
        for (const auto& a : e.time.args) out += ", " + print_slot(a);
        return out + ")";
      }
      out = "timesemantic(?" + e.time.variable + ", [";
      for (std::size_t i = 0; i < 4; ++i) out += (i ? ", " : "") + print_slot(e.time.slots[i]);
      return out + "])";
    }
  }
  return {};
}

inline std::string print_regex(const Regex& r) {
  auto wrapped = [](const Regex& c, bool need) { return need ? "(" + print_regex(c) + ")" : print_regex(c); };
  switch (r.kind) {
    case Regex::Kind::Term:
      return print_term(r.term);
    case Regex::Kind::Seq: {
      std::string out;
      for (std::size_t i = 0; i < r.children.size(); ++i) {
        const Regex& c = *r.children[i];
        if (i) out += ' ';
        out += wrapped(c, c.kind == Regex::Kind::Seq || c.kind == Regex::Kind::Alt);
      }
      return out;
    }
    case Regex::Kind::Alt: {
      std::string out;
      for (std::size_t i = 0; i < r.children.size(); ++i) {
        if (i) out += " | ";
        out += wrapped(*r.children[i], r.children[i]->kind == Regex::Kind::Alt);
      }
      return out;
    }
    case Regex::Kind::Opt:
    case Regex::Kind::Plus:
    case Regex::Kind::Star: {
      const char op = r.kind == Regex::Kind::Opt ? '?' : r.kind == Regex::Kind::Plus ? '+' : '*';
      const Regex& c = *r.children[0];
      return wrapped(c, c.kind != Regex::Kind::Term) + op;
    }
  }
  return {};
}

inline std::string print_where(const Query& q, const std::string& indent) {
  std::string out = "where {\n";
  for (const auto& p : q.patterns) {
    out += indent + "  " + print_term(p.subject) + " " + (p.is_attribute ? "@" : "") + p.predicate +
           " " + print_term(p.object) + ".\n";
  }
  for (const auto& f : q.filters) out += indent + "  filter(" + print_expr(*f) + ").\n";
  return out + indent + "}";
}

inline std::string print_flags(const Query& q) {
  std::string out;
  if (q.all) out += " all";
  if (q.inherited) out += " inherited";
  return out;
}

inline std::string print_projection(const Query& q) {
  switch (q.projection) {
    case Query::Projection::Implicit: return {};
    case Query::Projection::Star: return " *";
    case Query::Projection::Variables: {
      std::string out;
      for (const auto& v : q.variables) out += " ?" + v;
      return out;
    }
    case Query::Projection::Folders: {
      std::string out = " (";
      for (std::size_t i = 0; i < q.folders.size(); ++i) out += (i ? ", " : "") + print_name(q.folders[i]);
      return out + ")";
    }
  }
  return {};
}

/// Canonical text form; parse_query(print_query(q)) == q.
inline std::string print_query(const Query& q, const std::string& indent = "") {
  switch (q.kind) {
    case StatementKind::Select:
      return "select" + print_flags(q) + print_projection(q) + "\n" + indent + print_where(q, indent);
    case StatementKind::Fconstruct: {
      std::string out = "fconstruct " + print_name(q.target) + " as ?" + q.container_var;
      if (q.projection != Query::Projection::Implicit) out += "\nselect" + print_flags(q) + print_projection(q);
      return out + "\n" + print_where(q, indent);
    }
    case StatementKind::Pconstruct: {
      const PathSpec& p = *q.path;
      return "pconstruct " + print_name(q.target) + "\n(" + (p.start ? print_term(*p.start) : "") + ", " +
             (p.end ? print_term(*p.end) : "") + ", " + print_regex(*p.regex) + ") as ?" +
             q.container_var + "\n" + print_where(q, indent);
    }
    case StatementKind::Apply: {
      std::string out = "(";
      for (std::size_t i = 0; i < q.scope.size(); ++i) out += (i ? ", " : "") + print_name(q.scope[i]);
      return out + ") apply (\n  " + print_query(*q.inner, "  ") + "\n)";
    }
  }
  return {};
}

}  // namespace tpm::query
