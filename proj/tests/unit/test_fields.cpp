#include "doctest.h"
#include "../support/oracles.hpp"
#include "situ/fields.hpp"

using namespace situ;

namespace {

SegmentGraph line(int n, double len) {
  SegmentGraph g;
  for (int i = 0; i < n; ++i) g.addNode("n" + std::to_string(i));
  for (int i = 0; i + 1 < n; ++i) g.addEdge(Edge{i + 1, "n" + std::to_string(i), "n" + std::to_string(i + 1), len});
  return g;
}

TaskField field(const std::string& task, int priority, const NodeId& source) {
  return TaskField{task, FieldData{static_cast<std::int64_t>(task.size()), priority, source}};
}

}  // namespace

TEST_CASE("field value is range minus path distance, floored at zero") {
  SegmentGraph g = oracle::randomGraph(21, 9, 5);
  auto d = oracle::floydWarshall(g);
  for (int p = kMinPriority; p <= kMaxPriority; ++p) {
    TaskField f = field("t", p, "v2");
    for (const auto& n : g.nodes()) {
      double want = std::max(0.0, p * 40.0 - d[{"v2", n}]);
      CHECK(fieldValue(f, n, g, 40.0) == doctest::Approx(want));
    }
  }
  CHECK(fieldRange(3, 50.0) == 150.0);
}

TEST_CASE("combine sums the individual fields") {
  SegmentGraph g = line(6, 10);
  std::vector<TaskField> fs{field("a", 2, "n0"), field("bb", 5, "n5")};
  for (const auto& n : g.nodes()) {
    CHECK(combine(fs, n, g, 10.0) == doctest::Approx(fieldValue(fs[0], n, g, 10.0) + fieldValue(fs[1], n, g, 10.0)));
  }
  CHECK(combine({}, "n0", g, 10.0) == 0.0);
}

TEST_CASE("gradient follower climbs a line one node per step") {
  SegmentGraph g = line(10, 10);
  std::vector<TaskField> fs{field("t", 5, "n9")};
  NodeId at = "n0";
  int steps = 0;
  while (true) {
    NodeId next = gradientStep(at, fs, g, 20.0);
    if (next == at) break;
    CHECK(next == "n" + std::to_string(steps + 1));
    at = next;
    ++steps;
  }
  CHECK(at == "n9");
  CHECK(steps == 9);
  // Outside the field there is no gradient.
  CHECK(gradientStep("n0", {field("t", 1, "n9")}, g, 20.0) == "n0");
}

TEST_CASE("aging adds one level per elapsed window, capped") {
  TaskField f = field("t", 2, "n0");
  CHECK(agePriority(f, 99, 100).data.priority == 2);
  CHECK(agePriority(f, 100, 100).data.priority == 3);
  CHECK(agePriority(f, 200, 100).data.priority == 4);
  CHECK(agePriority(f, 10000, 100).data.priority == 5);
  CHECK(agePriority(f, 10000, 0).data.priority == 2);
  for (Tick t = 0; t < 1000; t += 7) {
    int want = std::min<int>(5, 2 + static_cast<int>(t / 100));
    CHECK(agePriority(f, t, 100).data.priority == want);
  }
}

TEST_CASE("field values round-trip") {
  TaskField f = field("task-7", 4, "n3");
  CHECK(fieldFromValue(fieldToValue(f)) == f);
  CHECK_THROWS(fieldFromValue(Value{{"taskId", "x"}}));
  CHECK(fieldKey("t1") == "field/t1");
}

TEST_CASE("field service spreads, ages and removes fields") {
  SegmentGraph g = line(4, 10);
  ContentLanguage lang;
  Platform platform(NetworkConfig{1, 0.0, 0}, g, lang);
  platform.addNodeSetup([](VirtualEnvironment& ve) { installFieldService(ve, FieldParams{10.0, 5}); });
  auto& a = platform.joinNode("a");
  auto& b = platform.joinNode("b");
  Kernel& k = platform.kernel();
  auto sync = [&] {
    for (const auto& n : platform.aliveNodes()) platform.environment(n)->synchronizeLocal();
  };
  scheduleRecurring(k, 1, 0, sync);

  a.act(Action{"ta", "emit", fieldToValue(field("t", 2, "n1"))});
  k.runUntil(1);
  REQUIRE(fieldsIn(b).size() == 1);
  CHECK(fieldsIn(b)[0].data.priority == 2);
  CHECK(b.sense(Sense{"x", Focus{"fields"}})["fields"].size() == 1);

  k.runUntil(11);
  CHECK(fieldsIn(a)[0].data.priority == 4);
  CHECK(fieldsIn(b)[0].data.priority == 4);
  k.runUntil(40);
  CHECK(fieldsIn(b)[0].data.priority == 5);

  auto& c = platform.joinNode("c");
  k.runUntil(42);
  REQUIRE(fieldsIn(c).size() == 1);
  CHECK(fieldsIn(c)[0].data.priority == 5);

  removeField(a, "t");
  k.runUntil(45);
  CHECK(fieldsIn(a).empty());
  CHECK(fieldsIn(b).empty());
  CHECK(fieldsIn(c).empty());
  CHECK_NOTHROW(removeField(a, "unknown"));

  CHECK_THROWS_AS(a.act(Action{"ta", "emit", fieldToValue(field("u", 6, "n1"))}), ActionRejected);
  CHECK_THROWS_AS(a.act(Action{"ta", "emit", fieldToValue(field("u", 1, "elsewhere"))}), ActionRejected);
  CHECK_THROWS_AS(a.act(Action{"ta", "emit", Value{{"bad", 1}}}), ActionRejected);
}
