#include <gtest/gtest.h>

#include "support.hpp"

namespace tpm {
namespace {

using testing::example1_tpm;

TpmGraph two_events() {
  TpmGraph g;
  g.add_node(make_instance(NodeKind::Event, "Event-5", Timestamp{5}));
  g.add_node(make_instance(NodeKind::Event, "Event-3", Timestamp{3}));
  return g;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

TEST(AddNode, InstanceGetsSynthesizedId) {
  TpmGraph g;
  EXPECT_EQ(g.add_node(make_instance(NodeKind::ArtifactInstance, "Analysis.doc", Timestamp{3})), "Analysis.doc@3");
  EXPECT_TRUE(g.contains("Analysis.doc@3"));
}

TEST(AddNode, EventWithDurationIsMalformed) {
  TpmGraph g;
  NodeRecord n = make_instance(NodeKind::Event, "Event-1", Timestamp{1});
  n.duration = 2;
  EXPECT_EQ(code_of([&] { g.add_node(n); }), ErrorCode::MalformedNode);
}

TEST(AddNode, ContainerWithTimestampIsMalformed) {
  TpmGraph g;
  NodeRecord n = make_container(NodeKind::FolderNode, "F", Timestamp{1}, 2);
  n.timestamp = Timestamp{1};
  EXPECT_EQ(code_of([&] { g.add_node(n); }), ErrorCode::MalformedNode);
}

TEST(AddNode, DuplicateIdRejected) {
  TpmGraph g;
  g.add_node(make_instance(NodeKind::Event, "Event-1", Timestamp{1}));
  EXPECT_EQ(code_of([&] { g.add_node(make_instance(NodeKind::Event, "Event-1", Timestamp{1})); }),
            ErrorCode::DuplicateNodeId);
}

TEST(AddNode, EqualTimestampInstancesRejected) {
  TpmGraph g;
  g.add_node(make_instance(NodeKind::AgentInstance, "Alex", Timestamp{2}));
  NodeRecord tie = make_instance(NodeKind::AgentInstance, "Alex", Timestamp{2});
  tie.node_id = "Alex-again";
  EXPECT_EQ(code_of([&] { g.add_node(tie); }), ErrorCode::MalformedNode);
}

TEST(AddNode, InstancesChainInTimeOrder) {
  TpmGraph g;
  for (std::uint64_t t : {1, 7, 3}) g.add_node(make_instance(NodeKind::ArtifactInstance, "A", Timestamp{t}));
  EXPECT_TRUE(g.contains_edge(edge_key("A@1", Relation::HappenedBefore, "A@3")));
  EXPECT_TRUE(g.contains_edge(edge_key("A@3", Relation::HappenedBefore, "A@7")));
  EXPECT_FALSE(g.contains_edge(edge_key("A@1", Relation::HappenedBefore, "A@7")));
  EXPECT_EQ(g.find_edge(edge_key("A@3", Relation::HappenedBefore, "A@7"))->weight, 4u);
  EXPECT_TRUE(check_invariants(g).empty());
}

TEST(AddEdge, UsedBetweenEventAndInstance) {
  TpmGraph g;
  g.add_node(make_instance(NodeKind::Event, "Event-6", Timestamp{6}));
  g.add_node(make_instance(NodeKind::ArtifactInstance, "Analysis.doc", Timestamp{6}));
  EXPECT_TRUE(g.add_edge({"Event-6@6", "Analysis.doc@6", Relation::Used, std::nullopt}));
  EXPECT_FALSE(g.add_edge({"Event-6@6", "Analysis.doc@6", Relation::Used, std::nullopt}));
}

TEST(AddEdge, BackwardHappenedBeforeIsTemporalViolation) {
  TpmGraph g = two_events();
  EXPECT_EQ(code_of([&] { g.add_edge({"Event-5@5", "Event-3@3", Relation::HappenedBefore, std::nullopt}); }),
            ErrorCode::TemporalViolation);
}

TEST(AddEdge, HappenedBeforeWeightComputedOrChecked) {
  TpmGraph g = two_events();
  g.add_edge({"Event-3@3", "Event-5@5", Relation::HappenedBefore, std::nullopt});
  EXPECT_EQ(g.find_edge(edge_key("Event-3@3", Relation::HappenedBefore, "Event-5@5"))->weight, 2u);
  TpmGraph h = two_events();
  EXPECT_EQ(code_of([&] { h.add_edge({"Event-3@3", "Event-5@5", Relation::HappenedBefore, 3}); }),
            ErrorCode::TemporalViolation);
}

TEST(AddEdge, DerivationThenReverseClosesCycle) {
  TpmGraph g;
  g.add_node(make_instance(NodeKind::ArtifactInstance, "A", Timestamp{3}));
  g.add_node(make_instance(NodeKind::ArtifactInstance, "A2", Timestamp{4}));
  g.add_edge({"A2@4", "A@3", Relation::WasDerivedFrom, std::nullopt});
  EXPECT_EQ(code_of([&] { g.add_edge({"A@3", "A2@4", Relation::WasDerivedFrom, std::nullopt}); }),
            ErrorCode::CycleIntroduced);
}

TEST(AddEdge, DerivationNeedsLaterSource) {
  TpmGraph g;
  g.add_node(make_instance(NodeKind::ArtifactInstance, "A", Timestamp{3}));
  g.add_node(make_instance(NodeKind::ArtifactInstance, "B", Timestamp{3}));
  EXPECT_EQ(code_of([&] { g.add_edge({"A@3", "B@3", Relation::WasDerivedFrom, std::nullopt}); }),
            ErrorCode::TemporalViolation);
}

TEST(AddEdge, UnknownEndpointAndIllegalRelation) {
  TpmGraph g = two_events();
  EXPECT_EQ(code_of([&] { g.add_edge({"Event-3@3", "nope", Relation::Used, std::nullopt}); }),
            ErrorCode::UnknownEndpoint);
  g.add_node(make_instance(NodeKind::ArtifactInstance, "Doc", Timestamp{3}));
  EXPECT_EQ(code_of([&] { g.add_edge({"Doc@3", "Event-3@3", Relation::Used, std::nullopt}); }),
            ErrorCode::IllegalRelation);
  EXPECT_EQ(code_of([&] { g.add_edge({"Event-3@3", "Doc@3", Relation::Used, 1}); }), ErrorCode::IllegalRelation);
}

TEST(AddEdge, TriggerOnlyBetweenEventsAndBackwardInTime) {
  TpmGraph g = two_events();
  EXPECT_TRUE(g.add_edge({"Event-5@5", "Event-3@3", Relation::WasTriggeredBy, std::nullopt}));
  TpmGraph h = two_events();
  EXPECT_EQ(code_of([&] { h.add_edge({"Event-3@3", "Event-5@5", Relation::WasTriggeredBy, std::nullopt}); }),
            ErrorCode::TemporalViolation);
}

TEST(AddEdge, IsPartOfRespectsWindow) {
  TpmGraph g = two_events();
  g.add_node(make_container(NodeKind::FolderNode, "F", Timestamp{3}, 1));
  EXPECT_TRUE(g.add_edge({"Event-3@3", "F", Relation::IsPartOf, std::nullopt}));
  EXPECT_EQ(code_of([&] { g.add_edge({"Event-5@5", "F", Relation::IsPartOf, std::nullopt}); }),
            ErrorCode::TemporalViolation);
}

TEST(InstancesOf, Example1) {
  const TpmGraph g = example1_tpm();
  std::vector<std::uint64_t> doc, alex;
  for (const auto& n : g.instances_of("Analysis.doc")) doc.push_back(n.timestamp->ticks);
  for (const auto& n : g.instances_of("Alex")) alex.push_back(n.timestamp->ticks);
  EXPECT_EQ(doc, (std::vector<std::uint64_t>{3, 4, 5, 6}));
  EXPECT_EQ(alex, (std::vector<std::uint64_t>{1, 6}));
  EXPECT_TRUE(g.instances_of("Nobody").empty());
}

TEST(Window, ExcludesEarlyEvents) {
  const TpmGraph w = example1_tpm().window(Timestamp{3}, Timestamp{6});
  EXPECT_FALSE(w.contains("Event-1@1"));
  EXPECT_FALSE(w.contains("Event-2@2"));
  EXPECT_FALSE(w.contains("Brainstorming.doc@1"));
  EXPECT_FALSE(w.contains("Alex@1"));
  EXPECT_TRUE(w.contains("Event-3@3"));
  EXPECT_TRUE(w.contains("Analysis.doc@6"));
}

TEST(Window, PointIntervalKeepsOneTick) {
  const TpmGraph w = example1_tpm().window(Timestamp{4}, Timestamp{4});
  for (const auto* n : w.nodes()) {
    if (is_container(n->kind)) {
      EXPECT_LE(n->time(), Timestamp{4});
      EXPECT_GE(n->end_time(), Timestamp{4});
    } else {
      EXPECT_EQ(n->time(), Timestamp{4}) << n->node_id;
    }
  }
  EXPECT_TRUE(w.contains("Analysis.doc@4"));
}

TEST(Window, FullRangeIsIdentity) {
  const TpmGraph g = example1_tpm();
  EXPECT_TRUE(canonically_equal(g.window(Timestamp{0}, g.max_time()), g));
}

TEST(Window, ReversedIntervalRejected) {
  const TpmGraph g = example1_tpm();
  EXPECT_EQ(code_of([&] { (void)g.window(Timestamp{5}, Timestamp{2}); }), ErrorCode::InvalidInterval);
}

TEST(Window, Monotone) {
  const TpmGraph g = example1_tpm();
  for (std::uint64_t a = 0; a <= 7; ++a) {
    for (std::uint64_t b = a; b <= 7; ++b) {
      const TpmGraph inner = g.window(Timestamp{a}, Timestamp{b});
      const TpmGraph outer = g.window(Timestamp{a == 0 ? 0 : a - 1}, Timestamp{b + 1});
      for (const auto* n : inner.nodes()) EXPECT_TRUE(outer.contains(n->node_id));
      for (const auto* e : inner.edges()) EXPECT_TRUE(outer.contains_edge(edge_key(*e)));
    }
  }
}

TEST(Inherited, FolderOverEvents3To6) {
  TpmGraph g = example1_tpm();
  g.add_node(make_container(NodeKind::FolderNode, "analysis", Timestamp{3}, 3));
  for (const char* e : {"Event-3@3", "Event-4@4", "Event-5@5", "Event-6@6"})
    g.add_edge({e, "analysis", Relation::IsPartOf, std::nullopt});
  std::set<std::string> used, generated, controlled;
  for (const auto& e : g.inherited_causal_edges("analysis")) {
    if (e.relation == Relation::Used) used.insert(e.to);
    if (e.relation == Relation::WasGeneratedBy) generated.insert(e.from);
    if (e.relation == Relation::WasControlledBy) controlled.insert(e.to);
  }
  EXPECT_TRUE(used.count("IEEE-analysis@3"));
  EXPECT_TRUE(used.count("Brainstorming.doc@4"));
  EXPECT_TRUE(used.count("Sample_Analysis.pdf@5"));
  EXPECT_EQ(used, (std::set<std::string>{"IEEE-analysis@3", "Brainstorming.doc@4", "Sample_Analysis.pdf@5",
                                         "Analysis.doc@6"}));
  EXPECT_EQ(generated, (std::set<std::string>{"Analysis.doc@3", "Analysis.doc@4", "Analysis.doc@5"}));
  EXPECT_EQ(controlled, (std::set<std::string>{"Paul@3", "Karl@4", "Paul@5", "Alex@6"}));
  // Derived only: nothing was stored.
  EXPECT_FALSE(g.contains_edge(edge_key("analysis", Relation::Used, "IEEE-analysis@3")));
}

TEST(Inherited, EmptyFolder) {
  TpmGraph g;
  g.add_node(make_container(NodeKind::FolderNode, "F", Timestamp{1}, 0));
  EXPECT_TRUE(g.inherited_causal_edges("F").empty());
}

TEST(Inherited, TriggerInsideWindowExcluded) {
  TpmGraph g;
  g.add_node(make_instance(NodeKind::Event, "P1", Timestamp{1}));
  g.add_node(make_instance(NodeKind::Event, "P2", Timestamp{2}));
  g.add_node(make_instance(NodeKind::Event, "P3", Timestamp{4}));
  g.add_edge({"P3@4", "P2@2", Relation::WasTriggeredBy, std::nullopt});
  g.add_edge({"P2@2", "P1@1", Relation::WasTriggeredBy, std::nullopt});
  g.add_node(make_container(NodeKind::FolderNode, "late", Timestamp{2}, 2));
  g.add_edge({"P3@4", "late", Relation::IsPartOf, std::nullopt});
  g.add_node(make_container(NodeKind::FolderNode, "mid", Timestamp{2}, 0));
  g.add_edge({"P2@2", "mid", Relation::IsPartOf, std::nullopt});
  EXPECT_TRUE(g.inherited_causal_edges("late").empty());
  const auto mid = g.inherited_causal_edges("mid");
  ASSERT_EQ(mid.size(), 1u);
  EXPECT_EQ(mid[0].to, "P1@1");
}

TEST(Inherited, NotAContainer) {
  const TpmGraph g = two_events();
  EXPECT_EQ(code_of([&] { (void)g.inherited_causal_edges("Event-3@3"); }), ErrorCode::NotAContainer);
}

TEST(Invariants, Example1GraphIsClean) {
  const TpmGraph g = example1_tpm();
  EXPECT_TRUE(check_invariants(g).empty());
  for (const auto* e : g.edges()) {
    EXPECT_TRUE(legal_edge(g.node(e->from).kind, e->relation, g.node(e->to).kind)) << edge_key(*e);
  }
}

TEST(Invariants, RemoveNodeRelinksChain) {
  TpmGraph g;
  for (std::uint64_t t : {1, 3, 7}) g.add_node(make_instance(NodeKind::ArtifactInstance, "A", Timestamp{t}));
  g.remove_node("A@3");
  EXPECT_TRUE(g.contains_edge(edge_key("A@1", Relation::HappenedBefore, "A@7")));
  EXPECT_EQ(g.find_edge(edge_key("A@1", Relation::HappenedBefore, "A@7"))->weight, 6u);
  EXPECT_TRUE(check_invariants(g).empty());
}

}  // namespace
}  // namespace tpm
