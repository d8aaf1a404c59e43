#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tpm/model.hpp"
#include "tpm/opm.hpp"

namespace tpm {

/// Course scenario: students (agents) run activities (processes) that read
/// and rewrite shared documents (artifacts). Every process gets its own
/// tick. Documents rewritten from each other over time form entity-level
/// cycles that only time annotations disentangle.
struct SyntheticConfig {
  std::size_t events = 100;
  /// 0 picks events / 8 (at least 4).
  std::size_t artifacts = 0;
  /// 0 picks events / 50 (at least 2).
  std::size_t agents = 0;
  std::size_t uses_per_process = 2;
  std::uint64_t spacing = 1;
  /// Percent of processes triggered by their predecessor.
  unsigned trigger_percent = 20;
  std::uint64_t seed = 1;
};

inline OpmGraph generate_course(const SyntheticConfig& c) {
  OpmGraph g;
  if (c.events == 0) return g;
  const std::size_t n_art = c.artifacts ? c.artifacts : std::max<std::size_t>(4, c.events / 8);
  const std::size_t n_ag = c.agents ? c.agents : std::max<std::size_t>(2, c.events / 50);
  std::mt19937_64 rng(c.seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  auto art = [](std::size_t i) { return "doc" + std::to_string(i); };
  auto ag = [](std::size_t i) { return "student" + std::to_string(i); };
  auto proc = [](std::size_t i) { return "activity" + std::to_string(i); };

  for (std::size_t i = 0; i < n_art; ++i) g.add_node({art(i), OpmKind::Artifact, {{"course", "e-enterprise"}}, {}});
  for (std::size_t i = 0; i < n_ag; ++i) g.add_node({ag(i), OpmKind::Agent, {}, {}});
  for (std::size_t i = 0; i < c.events; ++i) {
    g.add_node({proc(i), OpmKind::Process, {{"group", std::to_string(i % 5)}}, {}});
  }

  std::vector<char> seen(n_art, 0);
  auto edge = [&](std::string from, Relation rel, std::string to, std::uint64_t t) {
    OpmEdge e;
    e.from = std::move(from);
    e.to = std::move(to);
    e.relation = rel;
    e.time = Timestamp{t};
    g.add_edge(std::move(e));
  };
  for (std::size_t i = 0; i < c.events; ++i) {
    const std::uint64_t t = (i + 1) * std::max<std::uint64_t>(1, c.spacing);
    const std::size_t out = pick(n_art);
    std::vector<std::size_t> used;
    const std::size_t k = std::min(c.uses_per_process, n_art - 1);
    while (used.size() < k) {
      const std::size_t a = pick(n_art);
      if (a != out && std::find(used.begin(), used.end(), a) == used.end()) used.push_back(a);
    }
    edge(proc(i), Relation::WasControlledBy, ag(pick(n_ag)), t);
    for (std::size_t a : used) edge(proc(i), Relation::Used, art(a), t);
    edge(art(out), Relation::WasGeneratedBy, proc(i), t);
    for (std::size_t a : used) {
      // Derivation needs an earlier instance of the source.
      if (seen[a]) edge(art(out), Relation::WasDerivedFrom, art(a), t);
    }
    if (i > 0 && rng() % 100 < c.trigger_percent) edge(proc(i), Relation::WasTriggeredBy, proc(i - 1), t);
    for (std::size_t a : used) seen[a] = 1;
    seen[out] = 1;
  }
  return g;
}

}  // namespace tpm
