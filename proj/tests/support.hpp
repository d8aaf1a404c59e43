#pragma once

#include <algorithm>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "tpm/tpm.hpp"

namespace tpm::testing {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(TPM_FIXTURE_DIR) / name;
}

inline std::string fixture(const std::string& name) { return read_file(fixture_path(name)); }

inline std::string query_text(const std::string& name) {
  return read_file(std::filesystem::path(TPM_QUERY_DIR) / name);
}

inline OpmGraph example1_opm() { return parse_opm(fixture("example1.opm")); }

inline TpmGraph example1_tpm() { return convert(example1_opm()).first; }

/// Engine over the converted Example 1 graph.
inline std::unique_ptr<Engine> example1_engine(EngineOptions options = {}) {
  return std::make_unique<Engine>(example1_tpm(), std::move(options));
}

inline std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

inline std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

/// Node ids of a path, for compact assertions.
inline std::vector<std::vector<std::string>> node_lists(const std::vector<query::GraphPath>& paths) {
  std::vector<std::vector<std::string>> out;
  for (const auto& p : paths) out.push_back(p.nodes);
  return out;
}

/// Per-path row groups of an apply result: index -> sorted node column.
inline std::vector<std::vector<std::string>> per_path(const query::BindingSet& b, const std::string& column) {
  std::vector<std::vector<std::string>> out;
  auto it = std::find(b.columns.begin(), b.columns.end(), column);
  if (it == b.columns.end()) return out;
  const std::size_t c = static_cast<std::size_t>(it - b.columns.begin());
  for (std::size_t r = 0; r < b.rows.size(); ++r) {
    const std::size_t idx = b.path_index[r].value_or(1);
    if (out.size() < idx) out.resize(idx);
    out[idx - 1].push_back(b.rows[r][c].text);
  }
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

}  // namespace tpm::testing
