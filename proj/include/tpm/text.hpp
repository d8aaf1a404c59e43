#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpm/error.hpp"

namespace tpm::text {

/// One whitespace-separated field of a line-format record.
struct Field {
  std::string key;    // empty for positional fields
  std::string value;  // unquoted
  bool has_key = false;
  bool quoted = false;
  std::size_t column = 1;
};

namespace detail {

inline void read_quoted(std::string_view line, std::size_t& i, std::string& out,
                        std::size_t lineno) {
  const std::size_t open = i;
  ++i;  // opening quote
  while (i < line.size() && line[i] != '"') {
    if (line[i] == '\\') {
      if (i + 1 >= line.size()) break;
      const char c = line[++i];
      switch (c) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default:
          throw Error(ErrorCode::SyntaxError, std::string("unknown escape \\") + c,
                      {lineno, i});
      }
      ++i;
      continue;
    }
    out += line[i++];
  }
  if (i >= line.size()) {
    throw Error(ErrorCode::SyntaxError, "unterminated quoted value", {lineno, open + 1});
  }
  ++i;  // closing quote
}

}  // namespace detail

/// Splits one line into fields. `#` outside quotes starts a comment.
/// `key=value` fields have their key split off at the first `=`; the value
/// may be double-quoted with \" \\ \n \t escapes.
inline std::vector<Field> split_fields(std::string_view line, std::size_t lineno) {
  std::vector<Field> out;
  std::size_t i = 0;
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    if (i >= line.size() || line[i] == '#') break;
    Field f;
    f.column = i + 1;
    std::string raw;
    while (i < line.size() && !is_space(line[i])) {
      if (line[i] == '"') {
        if (!raw.empty()) {
          throw Error(ErrorCode::SyntaxError, "quote inside bare word", {lineno, i + 1});
        }
        detail::read_quoted(line, i, raw, lineno);
        f.quoted = true;
        if (i < line.size() && !is_space(line[i])) {
          throw Error(ErrorCode::SyntaxError, "text after closing quote", {lineno, i + 1});
        }
        break;
      }
      if (line[i] == '=' && !f.has_key) {
        f.has_key = true;
        f.key = raw;
        raw.clear();
        ++i;
        if (f.key.empty()) throw Error(ErrorCode::SyntaxError, "empty attribute key", {lineno, i});
        continue;
      }
      raw += line[i++];
    }
    f.value = std::move(raw);
    out.push_back(std::move(f));
  }
  return out;
}

/// Quotes a value when it would not survive split_fields as a bare word.
inline std::string quote(std::string_view value) {
  bool plain = !value.empty();
  for (char c : value) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '"' || c == '#' || c == '\\' ||
        c == '=') {
      plain = false;
      break;
    }
  }
  if (plain) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

/// Attribute keys must be bare identifiers.
inline bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.' || c == ':';
    if (!ok) return false;
  }
  return true;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::uint64_t require_u64(const Field& f, std::size_t lineno) {
  auto v = parse_u64(f.value);
  if (!v) {
    throw Error(ErrorCode::SyntaxError, "'" + f.value + "' is not a non-negative integer",
                {lineno, f.column});
  }
  return *v;
}

/// Iterates the lines of a text blob, 1-based.
template <typename F>
void for_each_line(std::string_view source, F&& fn) {
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    const std::size_t nl = source.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? source.size() : nl;
    ++lineno;
    fn(source.substr(pos, end - pos), lineno);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

}  // namespace tpm::text
