#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/text.hpp"

namespace tpm::query {

enum class Tok {
  Var,       // ?name
  Question,  // lone ?
  AtName,    // @name
  Word,      // bare word
  String,    // quoted text
  Integer,
  Time,      // tN
  LBrace, RBrace, LParen, RParen, LBracket, RBracket,
  Comma, Dot, Pipe, Plus, Star, Bang,
  Eq, Ne, Lt, Le, Gt, Ge, AndAnd, OrOr,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;  // name / word / unescaped string
  std::uint64_t number = 0;
  Position pos;
};

inline std::string_view describe(Tok t) {
  switch (t) {
    case Tok::Var: return "variable";
    case Tok::Question: return "'?'";
    case Tok::AtName: return "attribute";
    case Tok::Word: return "word";
    case Tok::String: return "string";
    case Tok::Integer: return "integer";
    case Tok::Time: return "timestamp";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Pipe: return "'|'";
    case Tok::Plus: return "'+'";
    case Tok::Star: return "'*'";
    case Tok::Bang: return "'!'";
    case Tok::Eq: return "'='";
    case Tok::Ne: return "'!='";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::AndAnd: return "'&&'";
    case Tok::OrOr: return "'||'";
    case Tok::End: return "end of input";
  }
  return "?";
}

namespace detail {

inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline bool is_time_word(std::string_view w) {
  if (w.size() < 2 || w[0] != 't') return false;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(w[i]))) return false;
  return true;
}

}  // namespace detail

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto peek = [&](std::size_t off = 0) -> char { return i + off < src.size() ? src[i + off] : '\0'; };

  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    Token tok;
    tok.pos = {line, col};
    auto take_ident = [&]() {
      std::string s;
      while (i < src.size() && detail::ident_char(src[i])) {
        s += src[i];
        advance();
      }
      return s;
    };

    if (c == '?') {
      advance();
      if (detail::ident_char(peek())) {
        tok.kind = Tok::Var;
        tok.text = take_ident();
      } else {
        tok.kind = Tok::Question;
      }
    } else if (c == '@') {
      advance();
      if (!detail::ident_char(peek())) throw Error(ErrorCode::SyntaxError, "expected attribute name after '@'", tok.pos);
      tok.kind = Tok::AtName;
      tok.text = take_ident();
    } else if (c == '\'' || c == '"' || c == '`') {
      const char open = c;
      advance();
      tok.kind = Tok::String;
      bool closed = false;
      while (i < src.size()) {
        const char d = src[i];
        if ((open == '`' && (d == '\'' || d == '`')) || (open != '`' && d == open)) {
          advance();
          closed = true;
          break;
        }
        if (d == '\\' && open == '"') {
          const char e = peek(1);
          switch (e) {
            case 'n': tok.text += '\n'; break;
            case 't': tok.text += '\t'; break;
            case '"': tok.text += '"'; break;
            case '\\': tok.text += '\\'; break;
            default: throw Error(ErrorCode::SyntaxError, "unknown escape in string", {line, col});
          }
          advance(2);
          continue;
        }
        tok.text += d;
        advance();
      }
      if (!closed) throw Error(ErrorCode::SyntaxError, "unterminated string", tok.pos);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
        digits += src[i];
        advance();
      }
      if (detail::ident_char(peek())) throw Error(ErrorCode::SyntaxError, "malformed number", tok.pos);
      auto v = text::parse_u64(digits);
      if (!v) throw Error(ErrorCode::SyntaxError, "number out of range", tok.pos);
      tok.kind = Tok::Integer;
      tok.number = *v;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string w;
      while (i < src.size()) {
        const char d = src[i];
        if (detail::ident_char(d) || d == '-' ||
            ((d == '.' || d == ':') && detail::ident_char(peek(1)))) {
          w += d;
          advance();
        } else {
          break;
        }
      }
      if (detail::is_time_word(w)) {
        auto v = text::parse_u64(std::string_view(w).substr(1));
        if (!v) throw Error(ErrorCode::SyntaxError, "timestamp out of range", tok.pos);
        tok.kind = Tok::Time;
        tok.number = *v;
      } else {
        tok.kind = Tok::Word;
      }
      tok.text = std::move(w);
    } else {
      auto two = [&](char a, char b) { return c == a && peek(1) == b; };
      if (two('!', '=')) { tok.kind = Tok::Ne; advance(2); }
      else if (two('<', '=')) { tok.kind = Tok::Le; advance(2); }
      else if (two('>', '=')) { tok.kind = Tok::Ge; advance(2); }
      else if (two('&', '&')) { tok.kind = Tok::AndAnd; advance(2); }
      else if (two('|', '|')) { tok.kind = Tok::OrOr; advance(2); }
      else {
        switch (c) {
          case '{': tok.kind = Tok::LBrace; break;
          case '}': tok.kind = Tok::RBrace; break;
          case '(': tok.kind = Tok::LParen; break;
          case ')': tok.kind = Tok::RParen; break;
          case '[': tok.kind = Tok::LBracket; break;
          case ']': tok.kind = Tok::RBracket; break;
          case ',': tok.kind = Tok::Comma; break;
          case '.': tok.kind = Tok::Dot; break;
          case '|': tok.kind = Tok::Pipe; break;
          case '+': tok.kind = Tok::Plus; break;
          case '*': tok.kind = Tok::Star; break;
          case '!': tok.kind = Tok::Bang; break;
          case '=': tok.kind = Tok::Eq; break;
          case '<': tok.kind = Tok::Lt; break;
          case '>': tok.kind = Tok::Gt; break;
          default:
            throw Error(ErrorCode::SyntaxError, std::string("unexpected character '") + c + "'", tok.pos);
        }
        advance();
      }
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.kind = Tok::End;
  end.pos = {line, col};
  out.push_back(end);
  return out;
}

}  // namespace tpm::query
