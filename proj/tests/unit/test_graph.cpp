#include <cmath>

#include "doctest.h"
#include "../support/oracles.hpp"
#include "situ/graph.hpp"

using namespace situ;

namespace {

SegmentGraph diamond() {
  return parseGraph(
      "graph undirected\n"
      "node s\nnode a\nnode b\nnode t\n"
      "edge 1 s a 100\nedge 2 a t 100\nedge 3 s b 100\nedge 4 b t 150\n");
}

}  // namespace

TEST_CASE("graph file round-trips") {
  SegmentGraph g = diamond();
  CHECK(g.nodes().size() == 4);
  CHECK(g.edges().size() == 4);
  CHECK(parseGraph(serializeGraph(g)) == g);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SegmentGraph r = oracle::randomGraph(seed, 8, 6);
    CHECK(parseGraph(serializeGraph(r)) == r);
  }
  SegmentGraph d(true);
  d.addNode("x");
  d.addNode("y");
  d.addEdge(Edge{7, "x", "y", 12.5});
  SegmentGraph back = parseGraph(serializeGraph(d));
  CHECK(back == d);
  CHECK(back.directed());
  CHECK_FALSE(back.edgeBetween("y", "x").has_value());
}

TEST_CASE("malformed graph files are rejected") {
  CHECK_THROWS_AS(parseGraph(""), GraphError);
  CHECK_THROWS_AS(parseGraph("graph sideways\n"), GraphError);
  CHECK_THROWS_AS(parseGraph("graph undirected\nnode a\nedge 1 a b 10\n"), GraphError);
  CHECK_THROWS_AS(parseGraph("graph undirected\nnode a\nnode b\nedge 1 a b 0\n"), GraphError);
  CHECK_THROWS_AS(parseGraph("graph undirected\nnode a\nnode b\nedge 1 a b 5\nedge 1 b a 5\n"), GraphError);
  CHECK_THROWS_AS(parseGraph("graph undirected\nnode a\nedge 1 a a 5\n"), GraphError);
  CHECK_THROWS_AS(loadGraphFile("/nonexistent/graph"), GraphError);
}

TEST_CASE("adjacency collapses parallel edges to the shortest") {
  SegmentGraph g;
  g.addNode("a");
  g.addNode("b");
  g.addEdge(Edge{1, "a", "b", 30});
  g.addEdge(Edge{2, "a", "b", 20});
  g.addEdge(Edge{3, "b", "a", 20});
  REQUIRE(g.adjacent("a").size() == 1);
  CHECK(g.adjacent("a")[0].edge == 2);
  CHECK(g.edgeBetween("b", "a") == 2);
  CHECK(g.meanEdgeLength() == doctest::Approx(70.0 / 3.0));
}

TEST_CASE("pathsWithin equals exhaustive enumeration") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SegmentGraph g = oracle::randomGraph(seed, 7, 5);
    double maxDist = 150.0 + 10.0 * static_cast<double>(seed % 10);
    auto paths = pathsWithin(g, "v0", "v6", maxDist);
    std::set<std::vector<NodeId>> got;
    for (const auto& p : paths) {
      CHECK(isSimplePath(g, p));
      CHECK(pathLength(g, p) <= maxDist + kLengthSlack);
      got.insert(p.nodes);
    }
    CHECK(got.size() == paths.size());
    CHECK(got == oracle::allSimplePaths(g, "v0", "v6", maxDist));
    for (std::size_t i = 1; i < paths.size(); ++i) {
      auto key = [&](const GraphPath& p) { return std::make_pair(pathLength(g, p), p.nodes); };
      CHECK(key(paths[i - 1]) < key(paths[i]));
    }
  }
}

TEST_CASE("distances match Floyd-Warshall") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SegmentGraph g = oracle::randomGraph(seed, 9, 7);
    auto d = oracle::floydWarshall(g);
    for (const auto& a : g.nodes()) {
      for (const auto& b : g.nodes()) {
        CHECK(distanceMeters(g, a, b) == doctest::Approx(d[{a, b}]));
        auto route = shortestRoute(g, a, b);
        REQUIRE(route.has_value());
        CHECK(route->nodes.front() == a);
        CHECK(route->nodes.back() == b);
        CHECK(isSimplePath(g, *route));
        CHECK(pathLength(g, *route) == doctest::Approx(d[{a, b}]));
      }
    }
  }
}

TEST_CASE("unreachable targets") {
  SegmentGraph g;
  g.addNode("a");
  g.addNode("b");
  CHECK(std::isinf(distanceMeters(g, "a", "b")));
  CHECK_FALSE(shortestRoute(g, "a", "b").has_value());
  CHECK(pathsWithin(g, "a", "b", 1e9).empty());
  CHECK_THROWS_AS(distanceMeters(g, "a", "zz"), GraphError);
}

TEST_CASE("shortestPath breaks ties lexicographically") {
  SegmentGraph g = parseGraph(
      "graph undirected\nnode s\nnode a\nnode b\nnode t\n"
      "edge 1 s a 100\nedge 2 a t 100\nedge 3 s b 100\nedge 4 b t 100\n");
  auto paths = pathsWithin(g, "s", "t", 500);
  REQUIRE(paths.size() == 2);
  CHECK(shortestPath(paths, g).nodes == std::vector<NodeId>{"s", "a", "t"});
  CHECK_THROWS_AS(shortestPath({}, g), GraphError);
}

TEST_CASE("isSimplePath rejects repeats and gaps") {
  SegmentGraph g = diamond();
  CHECK(isSimplePath(g, GraphPath{{"s", "a", "t", "b"}}));
  CHECK_FALSE(isSimplePath(g, GraphPath{{"s", "a", "s"}}));
  CHECK_FALSE(isSimplePath(g, GraphPath{{"s", "t"}}));
  CHECK(pathEdges(g, GraphPath{{"s", "b", "t"}}) == std::vector<EdgeId>{3, 4});
  CHECK(pathLength(g, GraphPath{{"s", "b", "t"}}) == 250.0);
  CHECK_THROWS_AS(pathEdges(g, GraphPath{{"s", "t"}}), GraphError);
}

TEST_CASE("projection validation") {
  SegmentGraph g = diamond();
  PathProjection p;
  p.id = 1;
  p.priority = 3;
  p.projection = {1, 2};
  CHECK_NOTHROW(validateProjection(g, p));
  p.projection = {1, 4};
  CHECK_THROWS_AS(validateProjection(g, p), GraphError);
  p.projection = {1};
  p.hull.segments = {9};
  CHECK_THROWS_AS(validateProjection(g, p), GraphError);
  p.hull.segments = {3};
  CHECK(p.segments() == std::set<EdgeId>{1, 3});
  p.priority = 6;
  CHECK_THROWS_AS(validateProjection(g, p), GraphError);
  PathProjection empty;
  CHECK_THROWS_AS(validateProjection(g, empty), GraphError);
  CHECK((p.status == ProjectionStatus::requested));
  p.markLocked();
  CHECK(std::string(toString(p.status)) == std::string("locked"));
}

TEST_CASE("operating space moves requested segments to locked") {
  OperatingSpace s;
  s.requested = {1, 2};
  CHECK_FALSE(s.holds(1));
  s.grant();
  CHECK(s.requested.empty());
  CHECK(s.holds(1));
  CHECK(s.holds(2));
  s.release({1});
  CHECK_FALSE(s.holds(1));
  CHECK(s.holds(2));
}
