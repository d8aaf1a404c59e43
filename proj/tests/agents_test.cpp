#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "generators.hpp"
#include "support.hpp"

namespace tpm {
namespace {

using Mode = AgentRegistration::Mode;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::IoError;
}

std::unique_ptr<Engine> manual_engine() {
  EngineOptions o;
  o.auto_register = false;
  auto e = testing::example1_engine(o);
  e->execute(testing::query_text("example2.tpql"), Timestamp{6});
  return e;
}

TEST(Register, TimedConstructsRegisterThemselves) {
  auto e = testing::example1_engine();
  e->execute(testing::query_text("example2.tpql"), Timestamp{6});
  ASSERT_EQ(e->agents().count("analysis_process"), 1u);
  const auto& a = e->agents().at("analysis_process");
  EXPECT_EQ(a.agent_id, "analysis_process#agent");
  EXPECT_EQ(a.mode, Mode::Pull);
  EXPECT_EQ(a.interval, 1u);
}

TEST(Register, Errors) {
  auto e = manual_engine();
  e->execute("fconstruct plain as ?f select ?x where { ?x @type event. }", Timestamp{6});
  EXPECT_EQ(code_of([&] { e->register_agent("plain", Mode::Pull); }), ErrorCode::NotTimed);
  EXPECT_EQ(code_of([&] { e->register_agent("ghost", Mode::Pull); }), ErrorCode::UnknownContainer);
  e->register_agent("analysis_process", Mode::Pull);
  EXPECT_EQ(code_of([&] { e->register_agent("analysis_process", Mode::Push); }), ErrorCode::DuplicateRegistration);
}

TEST(Register, ModeAndIntervalFromDeclarations) {
  auto e = testing::example1_engine();
  e->execute("fconstruct F as ?f select ?x where { ?f @timed true. ?f @mode push. ?x @type event. }", Timestamp{6});
  e->execute("fconstruct G as ?f select ?x where { ?f @timed true. ?f @interval 4. ?x @type event. }", Timestamp{6});
  EXPECT_EQ(e->agents().at("F").mode, Mode::Push);
  EXPECT_EQ(e->agents().at("G").interval, 4u);
}

TEST(Pull, WaitsForInterval) {
  auto e = manual_engine();
  e->register_agent("analysis_process", Mode::Pull, 3);
  EXPECT_TRUE(e->tick(Timestamp{7}).empty());
  EXPECT_TRUE(e->tick(Timestamp{8}).empty());
  const auto ran = e->tick(Timestamp{9});
  ASSERT_EQ(ran.size(), 1u);
  EXPECT_TRUE(ran[0].empty());
  EXPECT_EQ(e->agents().at("analysis_process").last_run, Timestamp{9});
}

TEST(Pull, UnchangedRunsAreNotLogged) {
  auto e = manual_engine();
  e->register_agent("analysis_process", Mode::Pull);
  const std::size_t before = e->evolution_log().size();
  e->tick(Timestamp{7});
  e->tick(Timestamp{8});
  EXPECT_EQ(e->evolution_log().size(), before);
}

TEST(Pull, PicksUpNewMembers) {
  auto e = manual_engine();
  e->register_agent("analysis_process", Mode::Pull);
  e->graph().add_node(make_instance(NodeKind::Event, "Event-7", Timestamp{6}, {{"project", "p4"}}));
  const auto d = e->tick(Timestamp{7});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].added, (std::vector<std::string>{"Event-7@6"}));
  EXPECT_EQ(d[0].at, Timestamp{6});
  EXPECT_TRUE(e->graph().contains_edge(edge_key("Event-7@6", Relation::IsPartOf, "analysis_process")));
}

TEST(Pull, NewDerivationAddsPath) {
  auto e = testing::example1_engine();
  e->execute(testing::query_text("example5.tpql"), Timestamp{6});
  const std::size_t before = e->materialized("analysisDoc_derivation").paths.size();
  e->graph().add_node(make_instance(NodeKind::ArtifactInstance, "Analysis.doc", Timestamp{7}));
  e->graph().add_edge({"Analysis.doc@7", "IEEE-analysis@3", Relation::WasDerivedFrom, std::nullopt});
  const auto d = e->tick(Timestamp{7});
  ASSERT_FALSE(d.empty());
  const auto& m = e->materialized("analysisDoc_derivation");
  EXPECT_TRUE(testing::as_set(m.members).count("IEEE-analysis@3"));
  bool found = false;
  for (const auto& p : m.paths)
    found = found || std::find(p.nodes.begin(), p.nodes.end(), "IEEE-analysis@3") != p.nodes.end();
  EXPECT_TRUE(found);
  EXPECT_GE(m.paths.size(), before);
}

TEST(Push, WatchesMembers) {
  auto e = manual_engine();
  const auto& a = e->register_agent("analysis_process", Mode::Push);
  EXPECT_EQ(a.watched, (std::unordered_set<std::string>{"Event-3@3", "Event-4@4", "Event-5@5", "Event-6@6"}));
}

TEST(Push, DisjointChangeIsIgnored) {
  auto e = manual_engine();
  e->register_agent("analysis_process", Mode::Push);
  e->graph().add_node(make_instance(NodeKind::ArtifactInstance, "Unrelated", Timestamp{9}));
  EXPECT_TRUE(e->notify_change({{"Unrelated@9"}, {}}, Timestamp{9}).empty());
}

TEST(Push, RelevantChangeRefreshes) {
  auto e = manual_engine();
  e->register_agent("analysis_process", Mode::Push);
  e->graph().set_attribute("Event-2@2", "project", "p4");
  auto d = e->notify_change({{"Event-2@2"}, {}}, Timestamp{7});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_TRUE(d[0].added.empty());
  e->graph().add_node(make_instance(NodeKind::Event, "Event-8", Timestamp{5}, {{"project", "p4"}}));
  d = e->notify_change({{"Event-8@5"}, {}}, Timestamp{8});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].added, (std::vector<std::string>{"Event-8@5"}));
}

TEST(Evolution, FolderOverTime) {
  auto e = testing::example1_engine();
  e->execute(testing::query_text("example2.tpql"), Timestamp{6});
  EXPECT_TRUE(e->evolution_at("analysis_process", Timestamp{2}).members.empty());
  EXPECT_EQ(e->evolution_at("analysis_process", Timestamp{3}).members, (std::vector<std::string>{"Event-3@3"}));
  EXPECT_EQ(e->evolution_at("analysis_process", Timestamp{5}).members,
            (std::vector<std::string>{"Event-3@3", "Event-4@4", "Event-5@5"}));
  EXPECT_EQ(testing::sorted(e->evolution_at("analysis_process", Timestamp{6}).members),
            testing::sorted(e->materialized("analysis_process").members));
  EXPECT_EQ(code_of([&] { e->evolution_at("ghost", Timestamp{6}); }), ErrorCode::UnknownContainer);
}

TEST(Evolution, PathsAreCutToThePresent) {
  auto e = testing::example1_engine();
  e->execute(testing::query_text("example5.tpql"), Timestamp{6});
  const Snapshot s = e->evolution_at("analysisDoc_derivation", Timestamp{4});
  ASSERT_FALSE(s.paths.empty());
  for (const auto& p : s.paths) {
    EXPECT_EQ(p.nodes.front(), "Analysis.doc@3");
    for (const auto& id : p.nodes) EXPECT_LE(e->graph().node(id).time(), Timestamp{4}) << id;
    EXPECT_LT(p.edges.size(), p.nodes.size());
  }
}

TEST(Evolution, ReplayMatchesCurrentState) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    testing::Rng rng(seed);
    Engine e(testing::convergence_base());
    for (const auto& d : testing::convergence_definitions(false)) e.execute(d, Timestamp{3});
    Timestamp now{3};
    for (std::size_t s = 0; s < 10; ++s) {
      now = Timestamp{now.ticks + 1};
      testing::random_change(rng, e.graph(), now, s, [&](const std::function<void(TpmGraph&)>& f) { f(e.graph()); });
      e.tick(now);
      for (const auto& [name, m] : e.materialized()) {
        EXPECT_EQ(testing::sorted(e.evolution_at(name, now).members), testing::sorted(m.members))
            << "seed " << seed << " " << name;
      }
    }
  }
}

TEST(Convergence, PushMatchesPull) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto out = testing::run_convergence(seed);
    ASSERT_EQ(out.pull.size(), out.push.size());
    for (const auto& [name, members] : out.pull)
      EXPECT_EQ(testing::sorted(members), testing::sorted(out.push.at(name))) << "seed " << seed << " " << name;
  }
}

TEST(Concurrency, ReadersDuringTicks) {
  auto e = testing::example1_engine();
  e->execute(testing::query_text("example2.tpql"), Timestamp{6});
  std::vector<std::thread> readers;
  std::atomic<std::size_t> rows{0};
  for (int i = 0; i < 4; ++i) {
    readers.emplace_back([&] {
      for (int j = 0; j < 20; ++j) rows += e->execute(testing::query_text("example3.tpql"), Timestamp{6}).rows.size();
    });
  }
  for (std::uint64_t t = 7; t < 27; ++t) e->tick(Timestamp{t});
  for (auto& r : readers) r.join();
  EXPECT_EQ(rows.load(), 4u * 20u * 3u);
}

}  // namespace
}  // namespace tpm
