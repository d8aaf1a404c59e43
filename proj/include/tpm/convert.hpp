#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/graph.hpp"
#include "tpm/model.hpp"
#include "tpm/opm.hpp"

namespace tpm {

struct ConversionReport {
  std::size_t artifact_instances_created = 0;
  std::size_t agent_instances_created = 0;
  std::size_t events_created = 0;
  std::size_t folders_created = 0;
  std::size_t happened_before_edges = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline Attributes instance_attributes(const OpmNode& n, NodeKind kind) {
  Attributes out;
  for (const auto& [k, v] : n.attributes) out[k == "type" ? "opm_type" : k] = v;
  out["type"] = std::string(to_string(kind));
  return out;
}

inline TpmGraph expand_entities(const OpmGraph& opm, const Resolution& r, OpmKind which,
                                NodeKind kind) {
  TpmGraph g;
  for (const auto& n : opm.nodes()) {
    if (n.kind != which) continue;
    auto it = r.times.find(n.id);
    if (it == r.times.end()) continue;
    for (Timestamp t : it->second) g.add_node(make_instance(kind, n.id, t, instance_attributes(n, kind)));
  }
  return g;
}

}  // namespace detail

/// Step 1: one instance per artifact per interaction time, chained.
inline TpmGraph expand_artifacts(const OpmGraph& opm, const Resolution& r) {
  return detail::expand_entities(opm, r, OpmKind::Artifact, NodeKind::ArtifactInstance);
}
inline TpmGraph expand_artifacts(const OpmGraph& opm) { return expand_artifacts(opm, resolve_times(opm)); }

/// Step 2: one instance per agent per control time, chained.
inline TpmGraph expand_agents(const OpmGraph& opm, const Resolution& r) {
  return detail::expand_entities(opm, r, OpmKind::Agent, NodeKind::AgentInstance);
}
inline TpmGraph expand_agents(const OpmGraph& opm) { return expand_agents(opm, resolve_times(opm)); }

/// Step 3: events per process interaction time, grouped into folders.
/// Events in a folder are chained with happenedBefore; folders sharing a
/// type are chained with startedBefore.
inline TpmGraph expand_processes(const OpmGraph& opm, const Resolution& r) {
  TpmGraph g;
  struct Folder {
    std::string type;
    std::vector<std::pair<Timestamp, std::string>> events;
  };
  std::map<std::string, Folder> folders;
  for (const auto& n : opm.nodes()) {
    if (n.kind != OpmKind::Process) continue;
    auto it = r.times.find(n.id);
    if (it == r.times.end()) continue;
    Folder& f = folders[folder_label(n)];
    f.type = folder_type(n);
    for (Timestamp t : it->second) {
      f.events.emplace_back(t, g.add_node(make_instance(NodeKind::Event, n.id, t,
                                                        detail::instance_attributes(n, NodeKind::Event))));
    }
  }
  std::map<std::string, std::vector<std::pair<Timestamp, std::string>>> by_type;
  for (auto& [label, f] : folders) {
    std::sort(f.events.begin(), f.events.end());
    const Timestamp start = f.events.front().first;
    const Timestamp end = f.events.back().first;
    Attributes attrs{{"type", "process"}, {"process_type", f.type}};
    NodeRecord folder = make_container(NodeKind::FolderNode, label, start, end - start, attrs);
    folder.entity_id = f.type;
    g.add_node(std::move(folder));
    for (const auto& [t, id] : f.events) g.add_edge({id, label, Relation::IsPartOf, std::nullopt});
    for (std::size_t i = 0; i + 1 < f.events.size(); ++i) {
      g.add_edge({f.events[i].second, f.events[i + 1].second, Relation::HappenedBefore, std::nullopt});
    }
    by_type[f.type].emplace_back(start, label);
  }
  for (auto& [type, list] : by_type) {
    std::sort(list.begin(), list.end());
    for (std::size_t i = 0; i + 1 < list.size(); ++i) {
      g.add_edge({list[i].second, list[i + 1].second, Relation::StartedBefore, std::nullopt});
    }
  }
  return g;
}
inline TpmGraph expand_processes(const OpmGraph& opm) { return expand_processes(opm, resolve_times(opm)); }

/// Full conversion. The three expansions run concurrently; the merge
/// inserts nodes ordered by (time, node id) so output is deterministic.
inline std::pair<TpmGraph, ConversionReport> convert(const OpmGraph& opm) {
  const ValidationReport validation = validate_opm(opm);
  if (validation.has_errors()) {
    std::string first;
    for (const auto& i : validation.issues) {
      if (i.severity == Severity::Error) {
        first = format_issue(i);
        break;
      }
    }
    throw Error(ErrorCode::ConversionError,
                "input has " + std::to_string(validation.count(Severity::Error)) +
                    " validation error(s); first: " + first);
  }
  const Resolution r = resolve_times(opm);

  try {
    auto artifacts = std::async(std::launch::async, [&] { return expand_artifacts(opm, r); });
    auto agents = std::async(std::launch::async, [&] { return expand_agents(opm, r); });
    auto processes = std::async(std::launch::async, [&] { return expand_processes(opm, r); });
    const TpmGraph parts[] = {artifacts.get(), agents.get(), processes.get()};

    std::vector<const NodeRecord*> nodes;
    for (const auto& p : parts)
      for (const NodeRecord* n : p.nodes()) nodes.push_back(n);
    std::sort(nodes.begin(), nodes.end(), [](const NodeRecord* a, const NodeRecord* b) {
      if (a->time() != b->time()) return a->time() < b->time();
      return a->node_id < b->node_id;
    });

    TpmGraph out;
    for (const NodeRecord* n : nodes) out.add_node(*n);
    for (const EdgeRecord* e : parts[2].edges()) out.add_edge(*e);
    for (const auto& re : r.edges) {
      const bool added = out.add_edge({instance_id(re.from_entity, re.from_time),
                                       instance_id(re.to_entity, re.to_time), re.relation,
                                       std::nullopt});
      if (!added) {
        throw Error(ErrorCode::ConversionError,
                    "two OPM edges map to one TPM edge at line " +
                        std::to_string(opm.edges()[re.index].pos.line));
      }
    }

    ConversionReport report;
    for (const NodeRecord* n : out.nodes()) {
      switch (n->kind) {
        case NodeKind::ArtifactInstance: ++report.artifact_instances_created; break;
        case NodeKind::AgentInstance: ++report.agent_instances_created; break;
        case NodeKind::Event: ++report.events_created; break;
        case NodeKind::FolderNode: ++report.folders_created; break;
        case NodeKind::PathNode: break;
      }
    }
    for (const EdgeRecord* e : out.edges())
      if (e->relation == Relation::HappenedBefore) ++report.happened_before_edges;
    for (const auto& i : validation.issues) report.warnings.push_back(format_issue(i));
    for (const auto& n : opm.nodes()) {
      if (r.times.count(n.id) == 0) {
        report.warnings.push_back(std::string(to_string(n.kind)) + " " + n.id +
                                  " has no interactions; no instances created");
      }
    }
    return {std::move(out), std::move(report)};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConversionError) throw;
    throw Error(ErrorCode::ConversionError, e.what());
  }
}

}  // namespace tpm
