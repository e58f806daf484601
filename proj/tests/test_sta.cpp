#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "stasmc/model_io.hpp"
#include "stasmc/sta.hpp"

using namespace stasmc;
using stasmc::testing::from_json_text;

namespace {

Network guarded(double clk) {
  auto n = from_json_text(R"({
    "templates": [{"name": "T", "clocks": ["clk"],
      "locations": [{"name": "A"}, {"name": "B"}], "initial": "A",
      "edges": [{"source": "A", "target": "B", "guard": "clk >= 5"}]}],
    "instances": [{"name": "t", "template": "T"}]})");
  n.templates[0].clocks[0].initial = clk;
  return n;
}

Network spawner() {
  return from_json_text(R"({
    "channels": [{"name": "go", "kind": "broadcast"}],
    "templates": [
      {"name": "E2E", "params": [{"name": "i", "kind": "int"}], "clocks": ["clk"], "spawnable": true,
       "locations": [{"name": "Wait", "invariant": ["clk <= 10"]}, {"name": "Done"}],
       "edges": [{"source": "Wait", "target": "Done", "guard": "clk >= 2"}]},
      {"name": "Src", "locations": [{"name": "L"}]}],
    "instances": [{"name": "src", "template": "Src"}]})");
}

}  // namespace

TEST(Validate, EmptyNetworkIsValid) {
  auto rep = validate(Network{});
  EXPECT_TRUE(rep.ok()) << rep.to_string();
}

TEST(Validate, UndeclaredChannel) {
  auto n = from_json_text(R"({
    "templates": [{"name": "T", "locations": [{"name": "A"}, {"name": "B"}],
      "edges": [{"source": "A", "target": "B", "sync": "send ack"}]}],
    "instances": [{"name": "t", "template": "T"}]})");
  auto rep = validate(n);
  EXPECT_TRUE(rep.contains("undeclared channel ack")) << rep.to_string();
  ASSERT_FALSE(rep.violations.empty());
  EXPECT_EQ(rep.violations[0].tmpl, "T");
  EXPECT_EQ(rep.violations[0].edge, 0);
}

TEST(Validate, NonTerminatingSpawnable) {
  auto n = from_json_text(R"({
    "templates": [{"name": "S", "spawnable": true, "locations": [{"name": "A"}],
      "edges": [{"source": "A", "target": "A"}]}]})");
  EXPECT_TRUE(validate(n).contains("non-terminating spawnable"));
}

TEST(Validate, DespawnLabelBreaksCycle) {
  auto n = from_json_text(R"({
    "templates": [{"name": "S", "spawnable": true,
      "locations": [{"name": "A"}, {"name": "B", "labels": ["despawn"]}],
      "edges": [{"source": "A", "target": "B"}, {"source": "B", "target": "A"}]}]})");
  EXPECT_TRUE(validate(n).ok()) << validate(n).to_string();
}

TEST(Validate, StructuralChecks) {
  auto n = from_json_text(R"({
    "globals": [{"name": "g", "kind": "bool", "initial": 3}],
    "templates": [{"name": "T", "clocks": ["c"], "locations": [{"name": "A", "exit_rate": 0}],
      "edges": [{"source": "A", "target": "Z", "weight": 0, "updates": ["c = -1"]},
                {"source": "A", "target": "A", "guard": "c + 1"}]}],
    "instances": [{"name": "t", "template": "T", "args": [1]}]})");
  auto rep = validate(n);
  EXPECT_TRUE(rep.contains("weight")) << rep.to_string();
  EXPECT_TRUE(rep.contains("Z")) << rep.to_string();
  EXPECT_TRUE(rep.contains("nonnegative")) << rep.to_string();
  EXPECT_TRUE(rep.contains("exit")) << rep.to_string();
  EXPECT_TRUE(rep.contains("argument")) << rep.to_string();
  EXPECT_TRUE(rep.contains("boolean")) << rep.to_string();
  EXPECT_GE(rep.violations.size(), 6u);
}

TEST(Validate, IdempotentAndPure) {
  auto n = guarded(0);
  n.templates[0].edges[0].sync = {SyncKind::Send, "nope"};
  auto a = validate(n);
  auto b = validate(n);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a.ok());
}

TEST(ModelIo, RejectsUnknownKeys) {
  EXPECT_THROW(from_json_text(R"({"chanels": []})"), ModelError);
  EXPECT_THROW(from_json_text(R"({"templates": [{"name": "T", "locs": []}]})"), ModelError);
}

TEST(ModelIo, RoundTrip) {
  auto n = spawner();
  auto back = network_from_json(network_to_json(n));
  EXPECT_EQ(n, back);
}

TEST(EnabledEdges, GuardBelowBoundary) {
  Model m(guarded(3));
  EXPECT_TRUE(enabled_edges(m, initial_state(m), 0).empty());
}

TEST(EnabledEdges, GuardBoundaryInclusive) {
  Model m(guarded(5));
  auto e = enabled_edges(m, initial_state(m), 0);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].edge, 0);
}

TEST(EnabledEdges, WeightsPreserved) {
  Model m(stasmc::testing::bernoulli(3, 7));
  auto e = enabled_edges(m, initial_state(m), 0);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].weight, 3);
  EXPECT_EQ(e[1].weight, 7);
}

TEST(EnabledEdges, BinaryReceiveNeedsSender) {
  auto n = from_json_text(R"({
    "channels": [{"name": "c", "kind": "binary"}, {"name": "d", "kind": "broadcast"}],
    "globals": [{"name": "ready", "kind": "bool"}],
    "templates": [
      {"name": "S", "locations": [{"name": "A"}, {"name": "B"}],
       "edges": [{"source": "A", "target": "B", "sync": "send c", "guard": "ready"}]},
      {"name": "R", "locations": [{"name": "A"}, {"name": "B"}],
       "edges": [{"source": "A", "target": "B", "sync": "recv c"},
                 {"source": "A", "target": "B", "sync": "recv d"}]}],
    "instances": [{"name": "s", "template": "S"}, {"name": "r", "template": "R"}]})");
  Model m(n);
  auto st = initial_state(m);
  auto e = enabled_edges(m, st, 1);
  ASSERT_EQ(e.size(), 1u);  // only the broadcast receive
  EXPECT_EQ(e[0].edge, 1);
  st.globals[0] = 1;
  EXPECT_EQ(enabled_edges(m, st, 1).size(), 2u);
}

TEST(Spawn, FreshInstance) {
  Model m(spawner());
  auto s = instantiate_spawn(m, initial_state(m), "E2E", {1});
  ASSERT_EQ(s.instances.size(), 2u);
  EXPECT_EQ(s.instances[1].clocks[0], 0);
  EXPECT_TRUE(s.instances[1].spawned);
}

TEST(Spawn, DistinctIdsNeverReused) {
  Model m(spawner());
  auto s = instantiate_spawn(m, initial_state(m), "E2E", {1});
  s = instantiate_spawn(m, s, "E2E", {2});
  ASSERT_EQ(s.instances.size(), 3u);
  int a = s.instances[1].id, b = s.instances[2].id;
  EXPECT_NE(a, b);
  s.instances[1].loc = m.tmpl(m.template_index("E2E")).location_index("Done");
  auto gone = reap_terminated(m, s);
  ASSERT_EQ(gone.size(), 1u);
  EXPECT_EQ(gone[0], a);
  s = instantiate_spawn(m, s, "E2E", {3});
  for (const auto& is : s.instances) EXPECT_NE(is.id, a);
}

TEST(Spawn, NonSpawnableRejected) {
  Model m(spawner());
  EXPECT_THROW(instantiate_spawn(m, initial_state(m), "Src", {}), ModelError);
}
