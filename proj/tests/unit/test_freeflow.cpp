#include "doctest.h"
#include "../support/oracles.hpp"
#include "situ/agv.hpp"
#include "situ/freeflow.hpp"

using namespace situ;

namespace {

Items idleAt(const NodeId& node) {
  return Items{{"position", node}, {"moving", false}, {"nextProjectionId", 100}, {"priority", 0},
               {"lookahead", 2}};
}

SegmentGraph line(int n) {
  SegmentGraph g;
  for (int i = 0; i < n; ++i) g.addNode("n" + std::to_string(i));
  for (int i = 0; i + 1 < n; ++i) g.addEdge(Edge{i + 1, "n" + std::to_string(i), "n" + std::to_string(i + 1), 10});
  return g;
}

}  // namespace

TEST_CASE("work commitment adds the parking activity to the working role") {
  AgvBehaviour b = defaultAgvBehaviour();
  SelectionInputs in;
  in.commitments["work"] = true;
  ActivityAssignment a = propagate(b.roles, b.commitments, 1.0, in);
  CHECK(a.at(10) == 2.0);
  CHECK(a.at(1) == 3.0);
  in.commitments["work"] = false;
  CHECK(propagate(b.roles, b.commitments, 1.0, in).at(1) == 1.0);
}

TEST_CASE("propagate matches the recursive oracle") {
  SplitMix64 rng = SplitMix64::stream(3, "trees");
  for (int trial = 0; trial < 100; ++trial) {
    int a = 1 + static_cast<int>(rng.below(8));
    int b = 1 + static_cast<int>(rng.below(8));
    std::vector<FreeFlowTree> roles{oracle::randomRole(rng, "r1", 0, a), oracle::randomRole(rng, "r2", 100, b)};
    std::vector<SituatedCommitment> commitments{
        SituatedCommitment{"c", {"r1"}, "r2", [](const Items&) { return true; }, ""}};
    SelectionInputs in = evaluateInputs(roles, commitments, {});
    double root = static_cast<double>(rng.below(4));
    ActivityAssignment got = propagate(roles, commitments, root, in);
    for (const auto& r : roles) {
      CHECK_NOTHROW(r.validate());
      for (const auto& n : r.nodes) {
        double want = oracle::freeFlowActivity(roles, commitments, in.commitments, root, in.stimuli, n.id);
        CHECK(got.at(n.id) == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("selection picks the maximal leaf, smallest id on ties") {
  FreeFlowTree t;
  t.roleName = "r";
  t.top = 1;
  t.nodes = {{1, false, ""}, {2, true, "x"}, {3, true, "y"}};
  t.edges = {{1, 2, 1.0}, {1, 3, 1.0}};
  ActivityAssignment a = propagate({t}, {}, 1.0, SelectionInputs{});
  Selection s = selectAction({t}, a, {"y"});
  CHECK(s.node == 2);
  CHECK(s.action == "x");
  CHECK_FALSE(s.external);
  t.stimuli = {Stimulus{"boost", 3, [](const Items&) { return 1.0; }}};
  ActionSelector sel({t}, {}, {"y"});
  sel.updateRoles({});
  CHECK(sel.select().action == "y");
  CHECK(sel.select().external);
}

TEST_CASE("tree validation") {
  FreeFlowTree t;
  t.roleName = "r";
  t.top = 1;
  t.nodes = {{1, false, ""}, {2, true, "x"}};
  t.edges = {{1, 2, 1.0}};
  CHECK_NOTHROW(t.validate());
  FreeFlowTree cyc = t;
  cyc.nodes.push_back({3, false, ""});
  cyc.edges.push_back({3, 3, 1.0});
  CHECK_THROWS(cyc.validate());
  FreeFlowTree negative = t;
  negative.edges[0].weight = -1;
  CHECK_THROWS(negative.validate());
  FreeFlowTree twoRoots = t;
  twoRoots.nodes.push_back({4, true, "z"});
  CHECK_THROWS(twoRoots.validate());
  FreeFlowTree internalLeaf = t;
  internalLeaf.nodes.push_back({5, false, ""});
  internalLeaf.edges.push_back({1, 5, 1.0});
  CHECK_THROWS(internalLeaf.validate());
  FreeFlowTree stray = t;
  stray.stimuli.push_back(Stimulus{"s", 9, {}});
  CHECK_THROWS(stray.validate());
}

TEST_CASE("default behaviour selects by task phase") {
  ActionSelector sel(defaultAgvBehaviour().roles, defaultAgvBehaviour().commitments, {"move", "pick", "drop"});
  Items k{{"hasTask", true}, {"task", {{"phase", "toPick"}, {"pickup", "n3"}, {"dropoff", "n5"}}},
          {"position", "n0"}, {"moving", false}};
  sel.updateRoles(k);
  sel.updateCommitments(k);
  CHECK(sel.select().node == 4);
  k["position"] = "n3";
  sel.updateRoles(k);
  CHECK(sel.select().action == "pick");
  Items idle{{"position", "n0"}, {"moving", false}};
  sel.updateRoles(idle);
  sel.updateCommitments(idle);
  CHECK(sel.select().action == "park");
}

TEST_CASE("refineMove projects, drives and waits") {
  SegmentGraph g = line(5);
  Items k = idleAt("n0");
  Refinement r = refineMove("a", k, g, "n4");
  REQUIRE(r.action.has_value());
  CHECK(r.action->name == "project");

  k["projection"] = {{"id", 100}, {"status", "requested"}, {"projection", {1, 2}}, {"hull", Value::array()},
                     {"priority", 0}};
  r = refineMove("a", k, g, "n4");
  CHECK_FALSE(r.action.has_value());

  k["projection"]["status"] = "locked";
  r = refineMove("a", k, g, "n4");
  REQUIRE(r.action.has_value());
  CHECK(r.action->name == "move");

  r = refineMove("a", idleAt("n4"), g, "n4");
  CHECK_FALSE(r.action.has_value());
}
