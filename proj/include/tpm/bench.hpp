#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "tpm/convert.hpp"
#include "tpm/graph.hpp"
#include "tpm/opm.hpp"
#include "tpm/reachability.hpp"
#include "tpm/synthetic.hpp"

namespace tpm::bench {

/// One provenance question asked of both representations.
struct QuerySpec {
  std::string name;
  std::set<std::string> relations;
  bool reverse = false;
  std::size_t max_len = 4;
};

/// why: what a document derives from. how: the activities, inputs and
/// people behind it. where: the activities that read it. when: its
/// generation and trigger history.
inline std::vector<QuerySpec> query_suite() {
  return {
      {"why", {"wasDerivedFrom"}, false, 4},
      {"how", {"wasGeneratedBy", "used", "wasControlledBy"}, false, 4},
      {"where", {"used", "wasDerivedFrom"}, true, 3},
      {"when", {"wasGeneratedBy", "wasTriggeredBy"}, false, 3},
  };
}

struct QueryCounts {
  std::string name;
  std::size_t opm_paths = 0;
  std::size_t tpm_paths = 0;
};

struct Row {
  std::size_t events = 0;
  std::size_t opm_nodes = 0, opm_edges = 0;
  std::size_t tpm_nodes = 0, tpm_edges = 0;
  std::vector<QueryCounts> queries;
  std::size_t opm_cycles_removed = 0;
  std::size_t tpm_cycles_removed = 0;
  double opm_ms = 0, tpm_ms = 0;
};

struct Result {
  std::vector<Row> rows;
  /// Least-squares slope of log(time) over log(TPM node count).
  double opm_exponent = 0, tpm_exponent = 0;
};

inline const std::set<std::string>& causal_labels() {
  static const std::set<std::string> s{"used", "wasGeneratedBy", "wasTriggeredBy", "wasDerivedFrom",
                                       "wasControlledBy"};
  return s;
}

namespace detail {

inline reach::LabeledDigraph keep_labels(const reach::LabeledDigraph& g, const std::set<std::string>& labels,
                                         bool reverse) {
  reach::LabeledDigraph out;
  for (std::size_t i = 0; i < g.node_count(); ++i) out.add_node(g.id(i));
  for (std::size_t a = 0; a < g.arc_count(); ++a) {
    const auto& arc = g.arc(a);
    if (labels.count(arc.label) == 0) continue;
    if (reverse) out.add_arc(arc.to, arc.from, arc.label, arc.key);
    else out.add_arc(arc.from, arc.to, arc.label, arc.key);
  }
  return out;
}

inline std::size_t count_paths(const reach::LabeledDigraph& g, std::size_t start, std::size_t max_len) {
  if (start == static_cast<std::size_t>(-1)) return 0;
  auto paths = reach::traverse_paths(
      g, [&](std::size_t n) { return n == start; }, [](std::size_t) { return true; },
      [](std::size_t) { return true; }, max_len);
  return paths.size();
}

inline double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < 2) return 0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= lx.size();
  my /= ly.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  return den == 0 ? 0 : num / den;
}

}  // namespace detail

/// Runs the suite on one generated graph. Queries start from a fixed sample
/// of documents: the OPM side at the entity, the TPM side at its latest
/// instance.
inline Row run_size(std::size_t events, std::uint64_t seed, std::size_t samples = 16) {
  Row row;
  row.events = events;
  SyntheticConfig cfg;
  cfg.events = events;
  cfg.seed = seed;
  const OpmGraph opm = generate_course(cfg);
  auto [tpm, report] = convert(opm);
  (void)report;
  row.opm_nodes = opm.nodes().size();
  row.opm_edges = opm.edges().size();
  row.tpm_nodes = tpm.node_count();
  row.tpm_edges = tpm.edge_count();
  if (events == 0) return row;

  std::vector<std::string> starts;
  for (const auto& n : opm.nodes()) {
    if (n.kind == OpmKind::Artifact && starts.size() < samples) starts.push_back(n.id);
  }
  std::vector<std::string> tpm_starts;
  for (const auto& s : starts) {
    auto inst = tpm.instances_of(s);
    tpm_starts.push_back(inst.empty() ? std::string() : inst.back().node_id);
  }
  const auto suite = query_suite();
  row.queries.resize(suite.size());
  for (std::size_t q = 0; q < suite.size(); ++q) row.queries[q].name = suite[q].name;

  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  auto t0 = clock::now();
  {
    const auto entity = reach::digraph_of(opm);
    const auto cleaned = reach::eliminate_cycles(detail::keep_labels(entity, causal_labels(), false));
    row.opm_cycles_removed = cleaned.removed.size();
    for (std::size_t q = 0; q < suite.size(); ++q) {
      const auto view = detail::keep_labels(cleaned.graph, suite[q].relations, suite[q].reverse);
      for (const auto& s : starts) row.queries[q].opm_paths += detail::count_paths(view, view.index_of(s), suite[q].max_len);
    }
  }
  row.opm_ms = ms_since(t0);

  t0 = clock::now();
  {
    const auto inst = reach::digraph_of(tpm);
    const auto cleaned = reach::eliminate_cycles(detail::keep_labels(inst, causal_labels(), false));
    row.tpm_cycles_removed = cleaned.removed.size();
    for (std::size_t q = 0; q < suite.size(); ++q) {
      const auto view = detail::keep_labels(cleaned.graph, suite[q].relations, suite[q].reverse);
      for (const auto& s : tpm_starts) {
        if (!s.empty()) row.queries[q].tpm_paths += detail::count_paths(view, view.index_of(s), suite[q].max_len);
      }
    }
  }
  row.tpm_ms = ms_since(t0);
  return row;
}

inline Result run(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  Result r;
  std::vector<double> n, topm, ttpm;
  for (std::size_t s : sizes) {
    r.rows.push_back(run_size(s, seed));
    const Row& row = r.rows.back();
    n.push_back(static_cast<double>(row.tpm_nodes));
    topm.push_back(row.opm_ms);
    ttpm.push_back(row.tpm_ms);
  }
  r.opm_exponent = detail::fit_exponent(n, topm);
  r.tpm_exponent = detail::fit_exponent(n, ttpm);
  return r;
}

/// Aligned table; `with_times` false gives seed-stable output.
inline std::string format(const Result& r, bool with_times = true) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%8s %9s %9s %9s %9s", "events", "opm_nodes", "opm_edges", "tpm_nodes",
                "tpm_edges");
  out += buf;
  for (const auto& q : query_suite()) {
    std::snprintf(buf, sizeof buf, " %10s %10s", (q.name + "_opm").c_str(), (q.name + "_tpm").c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, " %10s %10s", "cyc_opm", "cyc_tpm");
  out += buf;
  if (with_times) {
    std::snprintf(buf, sizeof buf, " %10s %10s", "opm_ms", "tpm_ms");
    out += buf;
  }
  out += '\n';
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%8zu %9zu %9zu %9zu %9zu", row.events, row.opm_nodes, row.opm_edges,
                  row.tpm_nodes, row.tpm_edges);
    out += buf;
    for (std::size_t q = 0; q < query_suite().size(); ++q) {
      const std::size_t o = q < row.queries.size() ? row.queries[q].opm_paths : 0;
      const std::size_t t = q < row.queries.size() ? row.queries[q].tpm_paths : 0;
      std::snprintf(buf, sizeof buf, " %10zu %10zu", o, t);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, " %10zu %10zu", row.opm_cycles_removed, row.tpm_cycles_removed);
    out += buf;
    if (with_times) {
      std::snprintf(buf, sizeof buf, " %10.2f %10.2f", row.opm_ms, row.tpm_ms);
      out += buf;
    }
    out += '\n';
  }
  if (with_times) {
    std::snprintf(buf, sizeof buf, "time exponent: opm %.2f, tpm %.2f\n", r.opm_exponent, r.tpm_exponent);
    out += buf;
  }
  return out;
}

}  // namespace tpm::bench
