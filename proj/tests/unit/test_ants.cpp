#include "doctest.h"
#include "../support/oracles.hpp"
#include "../support/probe.hpp"
#include "situ/scenario.hpp"

using namespace situ;

namespace {

SegmentGraph line(int n, double len) {
  SegmentGraph g;
  for (int i = 0; i < n; ++i) g.addNode("n" + std::to_string(i));
  for (int i = 0; i + 1 < n; ++i) g.addEdge(Edge{i + 1, "n" + std::to_string(i), "n" + std::to_string(i + 1), len});
  return g;
}

struct Rig {
  Rig(const SegmentGraph& g, AntParams params, Tick latency = 1)
      : lang(scenarioLanguage()), platform(NetworkConfig{latency, 0.0, 3}, g, lang), network(platform, params) {
    network.addInfrastructure();
  }
  void run(Tick ticks, probe::ProbeVehicle* p = nullptr) {
    Kernel& k = platform.kernel();
    for (Tick i = 0; i < ticks; ++i) {
      network.tick();
      if (p) p->communicate(256);
      k.runUntil(k.now() + 1);
      k.schedule(EventRecord{0, 0, kKernelNode, "tick", ""}, 1, {}, false);
    }
  }
  ContentLanguage lang;
  Platform platform;
  TrafficNetwork network;
};

}  // namespace

TEST_CASE("booking values round-trip and reject malformed input") {
  Booking b{9, "v1", {{"ia_a", 1, 0, 4, true}, {"ia_b", 2, 5, 9, false}}, 3};
  CHECK(bookingFromValue(bookingToValue(b)) == b);
  Value bad = bookingToValue(b);
  bad["entries"][1]["acked"] = true;
  bad["entries"][0]["acked"] = false;
  CHECK_THROWS_AS(bookingFromValue(bad), MalformedMessage);
}

TEST_CASE("travel time rounds up to whole ticks") {
  CHECK(travelTicks(100, 10) == 10);
  CHECK(travelTicks(101, 10) == 11);
  CHECK(travelTicks(1, 10) == 1);
  CHECK_THROWS(travelTicks(10, 0));
}

TEST_CASE("reservations respect capacity and evaporate strictly after the ttl") {
  SegmentGraph g = line(2, 100);
  ContentLanguage lang;
  Kernel k;
  VirtualEnvironment ve("rsu", k, g, lang);
  AntParams p;
  p.capacity = 2;
  installBookingService(ve, p);
  auto reserve = [&](std::int64_t id, int count, Tick refresh) {
    ve.act(Action{"ia", "reserve", reservationToValue(Reservation{id, "v", 1, 10, 20, refresh, count, false})});
  };
  reserve(1, 1, 0);
  reserve(2, 1, 0);
  CHECK(bookedLoad(ve, 1, 0, 100) == 2);
  CHECK_THROWS_AS(reserve(3, 1, 0), ActionRejected);
  CHECK_NOTHROW(reserve(2, 1, 5));  // a booking never competes with itself
  CHECK(bookedLoad(ve, 1, 21, 30) == 0);
  CHECK(bookedLoad(ve, 1, 0, 100, 1) == 1);
  CHECK_THROWS_AS(ve.act(Action{"ia", "reserve", reservationToValue(Reservation{4, "v", 99, 0, 1, 0, 1, false})}),
                  ActionRejected);
  CHECK(evaporateBookings(ve, 50, 50) == 0);
  CHECK(evaporateBookings(ve, 51, 50) == 1);  // booking 1, refreshed at 0
  CHECK(evaporateBookings(ve, 55, 50) == 0);
  CHECK(evaporateBookings(ve, 56, 50) == 1);
  CHECK(reservationsIn(ve).empty());
  ve.writeState({{reservationKey(1, -1), reservationToValue(Reservation{-1, "", 1, 0, 1000, 0, 7, true})}});
  CHECK(evaporateBookings(ve, 100000, 50) == 0);
  CHECK((predictCongestion(ve, 1, 0, 10, CongestionThresholds{2, 4, 6}) == CongestionStatus::jammed));
  CHECK((predictCongestion(ve, 1, 0, 10, CongestionThresholds{2, 4, 8}) == CongestionStatus::congested));
}

TEST_CASE("exploration ants find exactly the paths within range") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SegmentGraph g = oracle::randomGraph(seed + 100, 8, 5);
    Rig rig(g, AntParams{});
    probe::ProbeVehicle p("p", rig.platform);
    p.explore("v0", "v7", 250, 1);
    rig.run(40, &p);
    std::set<std::vector<NodeId>> got;
    for (const auto& f : p.found) {
      got.insert(f.path.nodes);
      CHECK(f.distance == doctest::Approx(pathLength(g, f.path)));
      CHECK(f.cost == doctest::Approx(f.distance));  // no reservations: free flow everywhere
    }
    CHECK(got.size() == p.found.size());
    CHECK(got == oracle::allSimplePaths(g, "v0", "v7", 250));
  }
}

TEST_CASE("booked edges raise the path cost") {
  SegmentGraph g = parseGraph(
      "graph undirected\nnode s\nnode a\nnode b\nnode t\n"
      "edge 1 s a 100\nedge 2 a t 100\nedge 3 s b 100\nedge 4 b t 100\n");
  Rig rig(g, AntParams{});
  rig.network.addStaticBooking(1, 7, 0, 1000);
  probe::ProbeVehicle p("p", rig.platform);
  p.explore("s", "t", 1000, 1);
  rig.run(20, &p);
  REQUIRE(p.found.size() == 2);
  for (const auto& f : p.found) {
    double want = f.path.nodes[1] == "a" ? 100 * 3.0 + 100 : 200;
    CHECK(f.cost == doctest::Approx(want));
  }
}

TEST_CASE("intention ants reserve hop by hop and come back acked") {
  SegmentGraph g = line(4, 100);
  Rig rig(g, AntParams{});
  probe::ProbeVehicle p("p", rig.platform);
  p.book(probe::bookingAlong(g, "p", 77, {"n0", "n1", "n2", "n3"}, 0));
  rig.run(12, &p);
  REQUIRE(p.acks.size() == 1);
  CHECK(p.acks[0].entries.size() == 3);
  for (const auto& e : p.acks[0].entries) CHECK(e.acked);
  CHECK(probe::reservationsOf(rig.platform, 77) == 3);
  CHECK(p.rejects.empty());
}

TEST_CASE("a full edge rejects the booking and names the prefix") {
  SegmentGraph g = line(4, 100);
  AntParams params;
  params.capacity = 1;
  Rig rig(g, params);
  rig.network.addStaticBooking(2, 1, 0, 1000);
  probe::ProbeVehicle p("p", rig.platform);
  p.book(probe::bookingAlong(g, "p", 5, {"n0", "n1", "n2", "n3"}, 0));
  rig.run(12, &p);
  CHECK(p.acks.empty());
  REQUIRE(p.rejects.size() == 1);
  CHECK(p.rejects[0].get("prefix") == 1);
  CHECK(rig.network.bookingRejects() == 1);
}

TEST_CASE("road driver follows its route edge by edge") {
  SegmentGraph g = line(3, 25);
  RoadDriver d(g, "n0", 10);
  CHECK_THROWS_AS(d.operate(Value{{"path", {"n1", "n2"}}}), ActionRejected);
  d.operate(Value{{"path", {"n0", "n1", "n2"}}});
  std::vector<std::pair<int, NodeId>> reached;
  for (int t = 1; t <= 10; ++t) {
    if (auto n = d.advance()) reached.emplace_back(t, *n);
  }
  CHECK(reached == std::vector<std::pair<int, NodeId>>{{4, "n1"}, {7, "n2"}});
  CHECK_FALSE(d.moving());
  CHECK(d.planningNode() == "n2");
}

TEST_CASE("a moving vehicle keeps the edge under it booked") {
  SegmentGraph g = line(3, 1000);
  AntParams params;
  params.maxDistMeters = 5000;
  Rig rig(g, params);
  VehicleAgent& v = rig.network.addVehicle("v", "n0", "n2", 0, 0);
  auto held = [&](const NodeId& at, EdgeId edge) {
    for (const auto& r : reservationsIn(*rig.platform.environment(infrastructureNode(at)))) {
      if (r.vehicleId == "v" && r.edge == edge && r.bookingId == v.bookingId()) return true;
    }
    return false;
  };
  bool sawFirst = false;
  while (!v.arrived() && rig.platform.kernel().now() < 400) {
    rig.run(1);
    Tick now = rig.platform.kernel().now();
    if (now > 30 && now < 95) {
      CHECK(held("n0", 1));
      sawFirst = true;
    }
    if (now > 130 && now < 195) CHECK(held("n1", 2));
  }
  CHECK(sawFirst);
  CHECK(v.arrived());
  // 200 ticks of travel after departing on the first cycle with paths known.
  CHECK(*v.arrivalTick() > 200);
  CHECK(*v.arrivalTick() <= 200 + params.refreshPeriod + 2);
  CHECK(v.switches() == 0);
}
