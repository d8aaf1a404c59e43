#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "tpm/tpm.hpp"

namespace {

using namespace tpm;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kParse = 2;
constexpr int kValidation = 3;
constexpr int kQuery = 4;
constexpr int kIo = 5;

int exit_for(const Error& e, int fallback) {
  switch (e.code()) {
    case ErrorCode::IoError:
    case ErrorCode::ChecksumMismatch: return kIo;
    case ErrorCode::UnknownTarget: return kUsage;
    default: return fallback;
  }
}

bool is_parse_error(ErrorCode c) {
  return c == ErrorCode::SyntaxError || c == ErrorCode::UnknownKind || c == ErrorCode::UnknownRelation ||
         c == ErrorCode::MalformedNode || c == ErrorCode::DuplicateNodeId;
}

Timestamp parse_time_arg(const std::string& s) {
  std::string_view v = s;
  if (!v.empty() && (v[0] == 't' || v[0] == 'T')) v.remove_prefix(1);
  auto n = text::parse_u64(v);
  if (!n) throw Error(ErrorCode::SyntaxError, "expected a time like t5 or 5, got '" + s + "'");
  return Timestamp{*n};
}

std::string describe(const MaterializedNode& m) {
  if (m.kind == NodeKind::PathNode) {
    return m.name + " (path, " + std::to_string(m.paths.size()) + (m.paths.size() == 1 ? " path)" : " paths)");
  }
  return m.name + " (folder, " + std::to_string(m.members.size()) + (m.members.size() == 1 ? " member)" : " members)");
}

std::string format_deltas(const std::vector<EvolutionDelta>& ds) {
  std::string out;
  for (const auto& d : ds) {
    out += "delta " + agent_id_for(d.target) + " " + std::to_string(d.at.ticks);
    for (const auto& id : d.added) out += " +" + id;
    for (const auto& id : d.removed) out += " -" + id;
    out += '\n';
  }
  return out;
}

std::string format_snapshot(const MaterializedNode& m, const Snapshot& s) {
  std::string out;
  if (m.kind == NodeKind::PathNode) {
    for (std::size_t i = 0; i < s.paths.size(); ++i) {
      out += "path:" + std::to_string(i + 1);
      for (const auto& n : s.paths[i].nodes) out += "\t" + n;
      out += '\n';
    }
    return out;
  }
  for (const auto& id : s.members) out += id + "\n";
  return out;
}

struct Options {
  std::string workspace = "tpm-workspace";
  bool force = false;
  std::string format = "tsv";
  std::string sizes = "1000,2000,4000";
  std::uint64_t seed = 7;
  std::size_t max_path_len = 0;
  std::string now;
  std::string file;
  std::string inline_query;
  std::string target;
  std::string out;
  bool no_times = false;
};

EngineOptions engine_options(const Options& o) {
  EngineOptions e;
  if (o.max_path_len) e.max_path_len = o.max_path_len;
  return e;
}

int cmd_load(const Options& o) {
  Workspace ws(o.workspace);
  const std::string data = read_file(o.file);
  const bool opm = std::filesystem::path(o.file).extension() != ".tpm";
  if (opm) {
    OpmGraph g;
    try {
      g = parse_opm(data);
    } catch (const Error& e) {
      std::cerr << o.file << ": " << e.what() << "\n";
      return exit_for(e, kParse);
    }
    const ValidationReport report = validate_opm(g);
    for (const auto& i : report.issues) std::cout << format_issue(i) << "\n";
    if (report.has_errors()) return kValidation;
    ws.write(Workspace::kOpm, serialize_opm(g));
    for (const char* stale : {Workspace::kTpm, Workspace::kMaterialized, Workspace::kLog})
      if (ws.has(stale)) ws.remove(stale);
    std::cout << g.count(OpmKind::Artifact) << " artifacts, " << g.count(OpmKind::Process) << " processes, "
              << g.count(OpmKind::Agent) << " agents\n";
    return kOk;
  }
  TpmGraph g;
  try {
    g = parse_tpm(data);
  } catch (const Error& e) {
    std::cerr << o.file << ": " << e.what() << "\n";
    return exit_for(e, is_parse_error(e.code()) ? kParse : kValidation);
  }
  for (const char* stale : {Workspace::kOpm, Workspace::kMaterialized, Workspace::kLog})
    if (ws.has(stale)) ws.remove(stale);
  ws.write(Workspace::kTpm, serialize_tpm(g));
  std::cout << g.node_count() << " nodes, " << g.edge_count() << " edges\n";
  return kOk;
}

int cmd_convert(const Options& o) {
  Workspace ws(o.workspace);
  if (!ws.has(Workspace::kOpm)) {
    std::cerr << "workspace holds no OPM graph; run load first\n";
    return kUsage;
  }
  if (ws.has(Workspace::kTpm) && !o.force) {
    std::cerr << "workspace is already converted; pass --force to redo it\n";
    return kUsage;
  }
  const OpmGraph opm = parse_opm(ws.read(Workspace::kOpm));
  const ValidationReport report = validate_opm(opm);
  if (report.has_errors()) {
    for (const auto& i : report.issues) std::cout << format_issue(i) << "\n";
    return kValidation;
  }
  TpmGraph g;
  ConversionReport conv;
  try {
    std::tie(g, conv) = convert(opm);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_for(e, kValidation);
  }
  for (const char* stale : {Workspace::kMaterialized, Workspace::kLog})
    if (ws.has(stale)) ws.remove(stale);
  ws.write(Workspace::kTpm, serialize_tpm(g));

  std::map<std::string, std::pair<std::string, std::vector<std::string>>> rows;
  for (const NodeRecord* n : g.nodes()) {
    if (!n->timestamp) continue;
    auto& r = rows[n->entity_id];
    r.first = std::string(to_string(n->kind));
    r.second.push_back("t" + std::to_string(n->timestamp->ticks));
  }
  std::size_t w = 6;
  for (const auto& [entity, _] : rows) w = std::max(w, entity.size());
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-*s  %-8s  %9s  %s\n", static_cast<int>(w), "entity", "kind", "instances", "times");
  std::cout << buf;
  for (const auto& [entity, r] : rows) {
    std::string times;
    for (const auto& t : r.second) times += (times.empty() ? "" : " ") + t;
    std::snprintf(buf, sizeof buf, "%-*s  %-8s  %9zu  ", static_cast<int>(w), entity.c_str(), r.first.c_str(),
                  r.second.size());
    std::cout << buf << times << "\n";
  }
  std::cout << "artifact instances: " << conv.artifact_instances_created << "\n"
            << "agent instances:    " << conv.agent_instances_created << "\n"
            << "events:             " << conv.events_created << "\n"
            << "process folders:    " << conv.folders_created << "\n"
            << "happenedBefore:     " << conv.happened_before_edges << "\n";
  for (const auto& warning : conv.warnings) std::cout << warning << "\n";
  return kOk;
}

/// Runs one statement against the engine and prints its result.
void run_statement(Engine& engine, const std::string& text, Timestamp now, const std::string& format,
                   std::ostream& out) {
  const query::Query q = query::parse_query(text);
  QueryOutcome r = engine.execute(q, now);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (r.materialized) {
    const auto& m = engine.materialized(*r.materialized);
    if (format == "dot") out << container_to_dot(engine.graph(), m.name);
    else out << "created " << describe(m) << "\n";
    return;
  }
  out << to_tsv(r.rows);
}

Timestamp default_now(const Options& o, const Engine& e) {
  return o.now.empty() ? e.graph().max_time() : parse_time_arg(o.now);
}

int cmd_query(const Options& o) {
  Workspace ws(o.workspace);
  auto engine = ws.load_engine(engine_options(o));
  std::string text = o.inline_query;
  if (!o.file.empty()) text = read_file(o.file);
  if (text.empty()) {
    std::cerr << "give a query file or --execute text\n";
    return kUsage;
  }
  try {
    const query::Query q = query::parse_query(text);
    const bool mutates = q.kind == query::StatementKind::Fconstruct || q.kind == query::StatementKind::Pconstruct;
    run_statement(*engine, text, default_now(o, *engine), o.format, std::cout);
    if (mutates) ws.save_engine(*engine);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_for(e, kQuery);
  }
  return kOk;
}

int cmd_tick(const Options& o) {
  Workspace ws(o.workspace);
  auto engine = ws.load_engine(engine_options(o));
  const Timestamp now = parse_time_arg(o.now);
  const auto deltas = engine->tick(now);
  std::cout << format_deltas(deltas);
  for (const auto& f : engine->agent_failures()) std::cerr << "agent failure: " << f << "\n";
  ws.save_engine(*engine);
  return kOk;
}

int cmd_repl(const Options& o) {
  Workspace ws(o.workspace);
  auto engine = ws.load_engine(engine_options(o));
  Timestamp now = default_now(o, *engine);
  std::string buffer, line;
  int depth = 0;
  bool dirty = false;
  auto depth_of = [](const std::string& s) {
    int d = 0;
    char quote = 0;
    for (char c : s) {
      if (quote) {
        if (c == quote || (quote == '`' && c == '\'')) quote = 0;
        continue;
      }
      if (c == '\'' || c == '"' || c == '`') quote = c;
      else if (c == '{' || c == '(') ++d;
      else if (c == '}' || c == ')') --d;
    }
    return d;
  };
  while (std::getline(std::cin, line)) {
    if (buffer.empty() && !line.empty() && line[0] == '\\') {
      std::istringstream cmd(line);
      std::string word, a, b;
      cmd >> word >> a >> b;
      try {
        if (word == "\\quit" || word == "\\q") break;
        if (word == "\\list") {
          for (const auto& [name, m] : engine->materialized()) std::cout << describe(m) << "\n";
        } else if (word == "\\evolution") {
          const auto& m = engine->materialized(a);
          std::cout << format_snapshot(m, engine->evolution_at(a, parse_time_arg(b)));
        } else if (word == "\\tick") {
          now = parse_time_arg(a);
          std::cout << format_deltas(engine->tick(now));
          dirty = true;
        } else {
          std::cout << "unknown command " << word << "; try \\list, \\evolution <name> <t>, \\tick <t>, \\quit\n";
        }
      } catch (const Error& e) {
        std::cout << "error: " << e.what() << "\n";
      }
      continue;
    }
    if (buffer.empty() && line.find_first_not_of(" \t") == std::string::npos) continue;
    buffer += line + "\n";
    depth += depth_of(line);
    if (depth > 0 || buffer.find('}') == std::string::npos) continue;
    try {
      const bool construct = query::parse_query(buffer).kind == query::StatementKind::Fconstruct ||
                             query::parse_query(buffer).kind == query::StatementKind::Pconstruct;
      run_statement(*engine, buffer, now, o.format, std::cout);
      dirty = dirty || construct;
    } catch (const Error& e) {
      std::cout << "error: " << e.what() << "\n";
    }
    buffer.clear();
    depth = 0;
  }
  if (dirty) ws.save_engine(*engine);
  return kOk;
}

int cmd_export_dot(const Options& o) {
  Workspace ws(o.workspace);
  std::string dot;
  if (o.target.empty() || o.target == "graph") {
    if (ws.has(Workspace::kTpm)) {
      dot = to_dot(ws.load_engine()->graph());
    } else {
      std::cerr << "workspace holds no TPM graph\n";
      return kUsage;
    }
  } else {
    auto engine = ws.load_engine();
    const NodeRecord* n = engine->graph().find(o.target);
    if (n == nullptr || !is_container(n->kind)) {
      throw Error(ErrorCode::UnknownTarget, "no graph, folder or path named '" + o.target + "'");
    }
    dot = container_to_dot(engine->graph(), o.target);
  }
  if (o.out.empty() || o.out == "-") std::cout << dot;
  else write_file(o.out, dot);
  return kOk;
}

int cmd_bench(const Options& o) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(o.sizes);
  std::string part;
  while (std::getline(ss, part, ',')) {
    auto n = text::parse_u64(part);
    if (!n) throw Error(ErrorCode::SyntaxError, "bad size '" + part + "'");
    sizes.push_back(static_cast<std::size_t>(*n));
  }
  std::cout << bench::format(bench::run(sizes, o.seed), !o.no_times);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal provenance graphs: load, convert, query, materialize and benchmark"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--workspace", o.workspace, "Workspace directory")->capture_default_str();

  auto* load = app.add_subcommand("load", "Load an OPM (.opm) or native TPM (.tpm) graph");
  load->add_option("file", o.file, "Graph file")->required();

  auto* conv = app.add_subcommand("convert", "Convert the workspace OPM graph to TPM");
  conv->add_flag("--force", o.force, "Overwrite an existing TPM graph");

  auto* query = app.add_subcommand("query", "Run a query file or inline query");
  query->add_option("file", o.file, "Query file");
  query->add_option("-e,--execute", o.inline_query, "Query text");
  query->add_option("--now", o.now, "Current time for constructs (default: latest graph time)");
  query->add_option("--format", o.format, "tsv or dot")->check(CLI::IsMember({"tsv", "dot"}));
  query->add_option("--max-path-len", o.max_path_len, "Longest path (edges) for pconstruct");

  auto* repl = app.add_subcommand("repl", "Interactive queries; \\list, \\evolution <name> <t>, \\tick <t>");
  repl->add_option("--now", o.now, "Initial current time");
  repl->add_option("--format", o.format, "tsv or dot")->check(CLI::IsMember({"tsv", "dot"}));
  repl->add_option("--max-path-len", o.max_path_len, "Longest path (edges) for pconstruct");

  auto* dot = app.add_subcommand("export-dot", "Write the graph or one folder/path node as DOT");
  dot->add_option("target", o.target, "graph (default) or a folder/path node name");
  dot->add_option("-o,--out", o.out, "Output file (default: stdout)");
  dot->add_option("--format", o.format, "dot")->check(CLI::IsMember({"dot"}));

  auto* bench = app.add_subcommand("bench", "Compare OPM and TPM provenance queries on synthetic graphs");
  bench->add_option("--sizes", o.sizes, "Comma-separated event counts")->capture_default_str();
  bench->add_option("--seed", o.seed, "Generator seed")->capture_default_str();
  bench->add_flag("--no-times", o.no_times, "Omit timings for reproducible output");

  auto* tick = app.add_subcommand("tick", "Advance the clock and run due pull agents");
  tick->add_option("now", o.now, "Time, e.g. t7")->required();
  tick->add_option("--max-path-len", o.max_path_len, "Longest path (edges) for pconstruct");

  app.fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*load) return cmd_load(o);
    if (*conv) return cmd_convert(o);
    if (*query) return cmd_query(o);
    if (*repl) return cmd_repl(o);
    if (*dot) return cmd_export_dot(o);
    if (*bench) return cmd_bench(o);
    if (*tick) return cmd_tick(o);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_for(e, kUsage);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
