#pragma once

#include <string>
#include <string_view>

#include "tpm/query/eval.hpp"

namespace tpm {

namespace detail {

inline std::string tsv_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Header of `?`-prefixed variable names, then one line per solution.
/// Rows evaluated per path start with `path:<index>`.
inline std::string to_tsv(const query::BindingSet& b) {
  bool per_path = false;
  for (const auto& p : b.path_index) per_path = per_path || p.has_value();
  std::string out;
  if (per_path) out += "path";
  for (std::size_t i = 0; i < b.columns.size(); ++i) {
    if (i || per_path) out += '\t';
    out += "?" + b.columns[i];
  }
  out += '\n';
  for (std::size_t r = 0; r < b.rows.size(); ++r) {
    if (per_path) out += b.path_index[r] ? "path:" + std::to_string(*b.path_index[r]) : std::string("-");
    for (std::size_t i = 0; i < b.rows[r].size(); ++i) {
      if (i || per_path) out += '\t';
      out += detail::tsv_escape(b.rows[r][i].text);
    }
    out += '\n';
  }
  return out;
}

}  // namespace tpm
