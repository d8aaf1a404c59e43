#pragma once

#include <istream>
#include <iterator>
#include <string>
#include <string_view>

#include "tpm/error.hpp"
#include "tpm/graph.hpp"
#include "tpm/text.hpp"

namespace tpm {

// Native line format:
//   node <id> <kind> entity=<e> ts=<n> [@key=value ...]
//   node <id> <folder|path> entity=<e> start=<n> duration=<n> [timed=true] [@key=value ...]
//   edge <from> <relation> <to> [w=<n>]
// User attributes carry a leading '@' so they never clash with the fixed keys.

inline std::string serialize_tpm(const TpmGraph& g) {
  std::string out;
  for (const NodeRecord* n : g.nodes()) {
    out += "node " + text::quote(n->node_id) + " " + std::string(to_string(n->kind)) +
           " entity=" + text::quote(n->entity_id);
    if (n->timestamp) {
      out += " ts=" + std::to_string(n->timestamp->ticks);
    } else {
      out += " start=" + std::to_string(n->start->ticks) + " duration=" + std::to_string(*n->duration);
    }
    if (n->timed) out += " timed=true";
    for (const auto& [k, v] : n->attributes) out += " @" + k + "=" + text::quote(v);
    out += '\n';
  }
  for (const EdgeRecord* e : g.edges()) {
    out += "edge " + text::quote(e->from) + " " + std::string(to_string(e->relation)) + " " +
           text::quote(e->to);
    if (e->weight) out += " w=" + std::to_string(*e->weight);
    out += '\n';
  }
  return out;
}

/// Loads through the validating store, so every graph invariant holds on
/// success. Chain edges implied by instance order may be listed or omitted.
inline TpmGraph parse_tpm(std::string_view source) {
  TpmGraph g;
  text::for_each_line(source, [&](std::string_view line, std::size_t lineno) {
    const auto fields = text::split_fields(line, lineno);
    if (fields.empty()) return;
    auto fail = [&](ErrorCode code, const std::string& msg, std::size_t col) {
      throw Error(code, msg, {lineno, col});
    };
    auto positional = [&](std::size_t i, const char* what) -> const text::Field& {
      if (i >= fields.size() || fields[i].has_key) {
        fail(ErrorCode::SyntaxError, std::string("expected ") + what,
             i < fields.size() ? fields[i].column : line.size() + 1);
      }
      return fields[i];
    };
    const auto& head = positional(0, "'node' or 'edge'");
    try {
      if (head.value == "node") {
        NodeRecord n;
        n.node_id = positional(1, "node id").value;
        const auto& kf = positional(2, "node kind");
        auto kind = parse_node_kind(kf.value);
        if (!kind) fail(ErrorCode::UnknownKind, "unknown node kind '" + kf.value + "'", kf.column);
        n.kind = *kind;
        for (std::size_t i = 3; i < fields.size(); ++i) {
          const auto& f = fields[i];
          if (!f.has_key) fail(ErrorCode::SyntaxError, "expected key=value", f.column);
          if (f.key == "entity") {
            n.entity_id = f.value;
          } else if (f.key == "ts") {
            n.timestamp = Timestamp{text::require_u64(f, lineno)};
          } else if (f.key == "start") {
            n.start = Timestamp{text::require_u64(f, lineno)};
          } else if (f.key == "duration") {
            n.duration = text::require_u64(f, lineno);
          } else if (f.key == "timed") {
            if (f.value != "true" && f.value != "false") {
              fail(ErrorCode::SyntaxError, "timed must be true or false", f.column);
            }
            n.timed = f.value == "true";
          } else if (f.key.size() > 1 && f.key[0] == '@' && text::valid_key(f.key.substr(1))) {
            if (!n.attributes.emplace(f.key.substr(1), f.value).second) {
              fail(ErrorCode::SyntaxError, "duplicate attribute '" + f.key + "'", f.column);
            }
          } else {
            fail(ErrorCode::SyntaxError, "unknown field '" + f.key + "'", f.column);
          }
        }
        g.add_node(std::move(n));
      } else if (head.value == "edge") {
        EdgeRecord e;
        e.from = positional(1, "source id").value;
        const auto& rf = positional(2, "relation");
        auto rel = parse_relation(rf.value);
        if (!rel) fail(ErrorCode::UnknownRelation, "unknown relation '" + rf.value + "'", rf.column);
        e.relation = *rel;
        e.to = positional(3, "target id").value;
        for (std::size_t i = 4; i < fields.size(); ++i) {
          const auto& f = fields[i];
          if (!f.has_key || f.key != "w") fail(ErrorCode::SyntaxError, "expected w=<ticks>", f.column);
          e.weight = text::require_u64(f, lineno);
        }
        g.add_edge(std::move(e));
      } else {
        fail(ErrorCode::SyntaxError, "expected 'node' or 'edge', got '" + head.value + "'", head.column);
      }
    } catch (const Error& e) {
      if (e.position().line != 0) throw;
      throw Error(e.code(), e.detail(), {lineno, head.column});
    }
  });
  return g;
}

inline TpmGraph parse_tpm(std::istream& in) {
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_tpm(std::string_view(data));
}

}  // namespace tpm
