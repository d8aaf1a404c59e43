#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tpm/engine.hpp"
#include "tpm/error.hpp"
#include "tpm/graph.hpp"
#include "tpm/opm.hpp"
#include "tpm/query/parser.hpp"
#include "tpm/query/printer.hpp"
#include "tpm/text.hpp"
#include "tpm/tpm_format.hpp"

namespace tpm {

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string checksum(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + p.string());
}

// --- materialized state as JSON -----------------------------------------------

inline nlohmann::json to_json(const Engine& e) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& [name, m] : e.materialized()) {
    json paths = json::array();
    for (const auto& p : m.paths) paths.push_back({{"nodes", p.nodes}, {"edges", p.edges}});
    json j = {{"name", name},
              {"kind", std::string(to_string(m.kind))},
              {"definition", query::print_query(*m.definition)},
              {"members", m.members},
              {"paths", paths},
              {"timed", m.timed},
              {"created", m.created.ticks}};
    if (m.declared_start) j["declared_start"] = m.declared_start->ticks;
    if (m.declared_duration) j["declared_duration"] = *m.declared_duration;
    nodes.push_back(std::move(j));
  }
  json agents = json::array();
  for (const auto& [target, a] : e.agents()) {
    std::vector<std::string> watched(a.watched.begin(), a.watched.end());
    std::sort(watched.begin(), watched.end());
    agents.push_back({{"agent_id", a.agent_id},
                      {"target", target},
                      {"mode", a.mode == AgentRegistration::Mode::Pull ? "pull" : "push"},
                      {"interval", a.interval},
                      {"watched", watched},
                      {"last_run", a.last_run.ticks}});
  }
  return {{"materialized", nodes}, {"agents", agents}};
}

inline void restore_json(Engine& e, const nlohmann::json& j) {
  try {
    for (const auto& n : j.at("materialized")) {
      MaterializedNode m;
      m.name = n.at("name").get<std::string>();
      m.kind = *parse_node_kind(n.at("kind").get<std::string>());
      m.definition = std::make_shared<query::Query>(query::parse_query(n.at("definition").get<std::string>()));
      m.members = n.at("members").get<std::vector<std::string>>();
      for (const auto& p : n.at("paths")) {
        m.paths.push_back({p.at("nodes").get<std::vector<std::string>>(), p.at("edges").get<std::vector<std::string>>()});
      }
      m.timed = n.at("timed").get<bool>();
      m.created = Timestamp{n.at("created").get<std::uint64_t>()};
      if (n.contains("declared_start")) m.declared_start = Timestamp{n["declared_start"].get<std::uint64_t>()};
      if (n.contains("declared_duration")) m.declared_duration = n["declared_duration"].get<std::uint64_t>();
      e.restore(std::move(m));
    }
    for (const auto& a : j.at("agents")) {
      AgentRegistration r;
      r.agent_id = a.at("agent_id").get<std::string>();
      r.target = a.at("target").get<std::string>();
      r.mode = a.at("mode").get<std::string>() == "push" ? AgentRegistration::Mode::Push : AgentRegistration::Mode::Pull;
      r.interval = a.at("interval").get<std::uint64_t>();
      for (const auto& w : a.at("watched")) r.watched.insert(w.get<std::string>());
      r.last_run = Timestamp{a.at("last_run").get<std::uint64_t>()};
      e.restore(std::move(r));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::IoError, std::string("malformed materialized state: ") + ex.what());
  }
}

/// Parses the `delta <agent_id> <t> +id... -id...` log export.
inline std::vector<EvolutionDelta> parse_log(std::string_view text) {
  std::vector<EvolutionDelta> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word, agent, t;
    ls >> word >> agent >> t;
    auto ticks = text::parse_u64(t);
    const std::string suffix = "#agent";
    if (word != "delta" || !ticks || agent.size() <= suffix.size() ||
        agent.compare(agent.size() - suffix.size(), suffix.size(), suffix) != 0) {
      throw Error(ErrorCode::SyntaxError, "malformed log entry", Position{lineno, 1});
    }
    EvolutionDelta d;
    d.target = agent.substr(0, agent.size() - suffix.size());
    d.at = Timestamp{*ticks};
    std::string id;
    while (ls >> id) {
      if (id.size() < 2 || (id[0] != '+' && id[0] != '-')) {
        throw Error(ErrorCode::SyntaxError, "log ids need a + or - prefix", Position{lineno, 1});
      }
      (id[0] == '+' ? d.added : d.removed).push_back(id.substr(1));
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// Directory holding graph.opm, graph.tpm, materialized.json and agents.log,
/// each listed with its checksum in manifest.json.
class Workspace {
 public:
  static constexpr const char* kOpm = "graph.opm";
  static constexpr const char* kTpm = "graph.tpm";
  static constexpr const char* kMaterialized = "materialized.json";
  static constexpr const char* kLog = "agents.log";
  static constexpr const char* kManifest = "manifest.json";

  explicit Workspace(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create workspace " + dir_.string() + ": " + ec.message());
    if (std::filesystem::exists(dir_ / kManifest)) {
      try {
        const auto j = nlohmann::json::parse(read_file(dir_ / kManifest));
        for (const auto& [name, sum] : j.at("files").items()) manifest_[name] = sum.get<std::string>();
      } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::IoError, std::string("malformed manifest: ") + ex.what());
      }
    }
  }

  const std::filesystem::path& dir() const { return dir_; }
  bool has(const std::string& name) const { return manifest_.count(name) != 0; }
  const std::map<std::string, std::string>& manifest() const { return manifest_; }

  /// Contents of a listed file after checksum verification.
  std::string read(const std::string& name) const {
    auto it = manifest_.find(name);
    if (it == manifest_.end()) throw Error(ErrorCode::IoError, name + " is not in the workspace");
    std::string data = read_file(dir_ / name);
    if (checksum(data) != it->second) {
      throw Error(ErrorCode::ChecksumMismatch, name + " does not match its manifest checksum");
    }
    return data;
  }

  void write(const std::string& name, std::string_view data) {
    write_file(dir_ / name, data);
    manifest_[name] = checksum(data);
    save_manifest();
  }

  void remove(const std::string& name) {
    std::error_code ec;
    std::filesystem::remove(dir_ / name, ec);
    manifest_.erase(name);
    save_manifest();
  }

  /// Engine over the stored TPM graph plus materialized state and log.
  std::unique_ptr<Engine> load_engine(EngineOptions options = {}) const {
    if (!has(kTpm)) throw Error(ErrorCode::IoError, "workspace holds no TPM graph; run load or convert first");
    auto engine = std::make_unique<Engine>(parse_tpm(read(kTpm)), std::move(options));
    if (has(kMaterialized)) {
      try {
        restore_json(*engine, nlohmann::json::parse(read(kMaterialized)));
      } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::IoError, std::string("malformed materialized state: ") + ex.what());
      }
    }
    if (has(kLog)) engine->restore_log(parse_log(read(kLog)));
    return engine;
  }

  void save_engine(const Engine& e) {
    write(kTpm, serialize_tpm(e.graph()));
    write(kMaterialized, to_json(e).dump(2) + "\n");
    write(kLog, e.export_log());
  }

 private:
  void save_manifest() const {
    nlohmann::json files = nlohmann::json::object();
    for (const auto& [name, sum] : manifest_) files[name] = sum;
    write_file(dir_ / kManifest, nlohmann::json{{"files", files}}.dump(2) + "\n");
  }

  std::filesystem::path dir_;
  std::map<std::string, std::string> manifest_;
};

}  // namespace tpm
