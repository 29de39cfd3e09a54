#include "doctest.h"
#include "situ/environment.hpp"

using namespace situ;

namespace {

SegmentGraph lineGraph() {
  SegmentGraph g;
  for (const char* n : {"p0", "p1", "p2", "p3"}) g.addNode(n);
  g.addEdge(Edge{1, "p0", "p1", 40});
  g.addEdge(Edge{2, "p1", "p2", 40});
  g.addEdge(Edge{3, "p2", "p3", 40});
  return g;
}

ContentLanguage pingLanguage() {
  ContentLanguage lang;
  lang.defineTerm("n", Domain::integer(0, 100));
  lang.definePerformative("Ping", "ping", {"n"}, true);
  lang.definePerformative("Ping", "pong", {"n"});
  return lang;
}

struct Recorder : ExternalEnvironment {
  std::vector<Value> ops;
  Value observe(const Value& o) override { return {{"type", "raw"}, {"echo", o}}; }
  void operate(const Value& op) override { ops.push_back(op); }
};

}  // namespace

TEST_CASE("state repository template reads") {
  SegmentGraph g = lineGraph();
  ContentLanguage lang;
  Kernel k;
  VirtualEnvironment ve("n", k, g, lang);
  ve.writeState({{"position/a", "p0"}, {"position/b", "p1"}, {"other", 3}});
  CHECK(ve.readState({{"position/a", nullptr}}) == Items{{"position/a", "p0"}});
  CHECK(ve.readState({{"position/a", "p9"}}).empty());
  CHECK(ve.readPrefix("position/").size() == 2);
  ve.eraseState({"position/a", "missing"});
  CHECK(ve.readPrefix("position/") == Items{{"position/b", "p1"}});
  CHECK_THROWS(ve.writeState({{"", 1}}));
}

TEST_CASE("virtual and external foci") {
  SegmentGraph g = lineGraph();
  ContentLanguage lang;
  Kernel k;
  VirtualEnvironment ve("n", k, g, lang);
  ve.registerVirtualFocus("count", [](const VirtualEnvironment& v, const Sense& s) {
    return Value{{"type", "count"}, {"n", v.state().size()}, {"who", s.agentId}};
  });
  ve.registerExternalFocus(
      "raw", [](const Sense& s) { return Value{{"ask", s.focus.name}}; },
      [](const Sense&, const Value& observed) { return Value{{"type", "raw"}, {"got", observed["echo"]}}; });
  ve.writeState({{"x", 1}});
  CHECK(ve.sense(Sense{"a", Focus{"count"}})["n"] == 1);
  CHECK(ve.isVirtualFocus("count"));
  CHECK_FALSE(ve.isVirtualFocus("raw"));
  CHECK_THROWS_AS(ve.sense(Sense{"a", Focus{"nothing"}}), UnknownFocus);
  CHECK_THROWS(ve.sense(Sense{"a", Focus{"raw"}}));
  Recorder ext;
  ve.setExternal(&ext);
  CHECK(ve.sense(Sense{"a", Focus{"raw"}})["got"] == Value{{"ask", "raw"}});
}

TEST_CASE("actions write state or operate the external world") {
  SegmentGraph g = lineGraph();
  ContentLanguage lang;
  Kernel k;
  VirtualEnvironment ve("n", k, g, lang);
  ve.registerVirtualAction("mark", [](VirtualEnvironment&, const Action& a) {
    if (!a.params.contains("v")) throw ActionRejected("no value");
    return Items{{"mark/" + a.agentId, a.params["v"]}};
  });
  ve.registerExternalAction("go", [](const VirtualEnvironment&, const Action& a) { return Value{{"to", a.params["to"]}}; });
  ve.act(Action{"a", "mark", {{"v", 7}}});
  CHECK(ve.state().at("mark/a") == 7);
  CHECK_THROWS_AS(ve.act(Action{"a", "mark", Value::object()}), ActionRejected);
  CHECK_THROWS_AS(ve.act(Action{"a", "fly", Value::object()}), ActionRejected);
  CHECK_THROWS_AS(ve.act(Action{"a", "go", {{"to", "p1"}}}), ActionRejected);
  Recorder ext;
  ve.setExternal(&ext);
  ve.act(Action{"a", "go", {{"to", "p1"}}});
  REQUIRE(ext.ops.size() == 1);
  CHECK(ext.ops[0] == Value{{"to", "p1"}});
  CHECK(ve.isVirtualAction("mark"));
  CHECK(ve.knowsAction("go"));
  CHECK_FALSE(ve.knowsAction("fly"));
}

TEST_CASE("messages reach agents on other nodes after the latency") {
  SegmentGraph g = lineGraph();
  ContentLanguage lang = pingLanguage();
  Platform platform(NetworkConfig{2, 0.0, 0}, g, lang);
  auto& n1 = platform.joinNode("n1");
  auto& n2 = platform.joinNode("n2");
  platform.registerAddress("a", "n1", "robot");
  platform.registerAddress("b", "n2", "robot");
  std::vector<std::pair<Tick, Message>> got;
  n2.host("b", [&](const Message& m) { got.emplace_back(platform.kernel().now(), m); });
  n1.host("a", [](const Message&) {});
  Message m{5, "a", "b", "Ping", "ping", Value::array({3})};
  n1.sendMessage(m);
  platform.kernel().runUntil(10);
  REQUIRE(got.size() == 1);
  CHECK(got[0].first == 2);
  CHECK(got[0].second == m);

  // A repeated id is delivered once.
  n1.sendMessage(m);
  platform.kernel().runUntil(20);
  CHECK(got.size() == 1);

  Message bad{6, "a", "b", "Ping", "ping", Value::array({300})};
  CHECK_THROWS_AS(n1.sendMessage(bad), MalformedMessage);
}

TEST_CASE("scope and broadcast receivers follow positions and audiences") {
  SegmentGraph g = lineGraph();
  ContentLanguage lang = pingLanguage();
  Platform platform(NetworkConfig{0, 0.0, 0}, g, lang);
  auto& ve = platform.joinNode("n");
  platform.registerAddress("a", "n", "robot");
  platform.registerAddress("b", "n", "robot");
  platform.registerAddress("c", "n", "robot");
  platform.registerAddress("w", "n", "manager");
  platform.registerAudience("Ping", "robot");
  ve.writeState({{positionKey("a"), "p0"}, {positionKey("b"), "p1"}, {positionKey("c"), "p3"}, {positionKey("w"), "p0"}});
  auto scoped = ve.resolveReceivers(Message{1, "a", "50m", "Ping", "ping", Value::array({1})});
  CHECK(scoped == std::map<NodeId, std::vector<std::string>>{{"n", {"b"}}});
  auto wide = ve.resolveReceivers(Message{1, "a", "120m", "Ping", "ping", Value::array({1})});
  CHECK(wide == std::map<NodeId, std::vector<std::string>>{{"n", {"b", "c"}}});
  auto all = ve.resolveReceivers(Message{1, "w", "all", "Ping", "ping", Value::array({1})});
  CHECK(all == std::map<NodeId, std::vector<std::string>>{{"n", {"a", "b", "c"}}});
  auto nowhere = ve.resolveReceivers(Message{1, "x", "50m", "Ping", "ping", Value::array({1})});
  CHECK(nowhere.empty());
  CHECK(ve.resolveReceivers(Message{1, "a", "zz", "Ping", "ping", Value::array({1})}).empty());
}

TEST_CASE("synchronization updates travel between nodes") {
  SegmentGraph g = lineGraph();
  ContentLanguage lang;
  Platform platform(NetworkConfig{1, 0.0, 0}, g, lang);
  std::vector<std::pair<NodeId, Items>> seen;
  platform.addNodeSetup([&](VirtualEnvironment& ve) {
    ve.registerSyncHandler(SyncKind::resourceMirror, [&](VirtualEnvironment& self, const SynchronizationUpdate& u) {
      seen.emplace_back(self.node(), u.payload);
      self.writeState(u.payload);
    });
  });
  auto& a = platform.joinNode("a");
  auto& b = platform.joinNode("b");
  auto& c = platform.joinNode("c");
  a.emitSync(SynchronizationUpdate{SyncKind::resourceMirror, "a", {{"k", 1}}});
  platform.kernel().runUntil(5);
  CHECK(seen.size() == 2);
  CHECK(b.state().at("k") == 1);
  CHECK(c.state().at("k") == 1);
  CHECK(a.state().count("k") == 0);
  b.emitSync(SynchronizationUpdate{SyncKind::resourceMirror, "b", {{"k", 2}}}, {"c"});
  platform.kernel().runUntil(10);
  CHECK(c.state().at("k") == 2);
  CHECK(a.state().count("k") == 0);
}

TEST_CASE("membership changes are observed by the remaining nodes") {
  SegmentGraph g = lineGraph();
  ContentLanguage lang;
  Platform platform(NetworkConfig{}, g, lang);
  std::vector<std::tuple<NodeId, NodeId, bool>> seen;
  auto& a = platform.joinNode("a");
  platform.addNodeSetup([&](VirtualEnvironment& ve) {
    ve.registerSyncHandler(SyncKind::membership, [&](VirtualEnvironment& self, const SynchronizationUpdate& u) {
      seen.emplace_back(self.node(), u.payload.at("node").get<std::string>(), u.payload.at("alive").get<bool>());
    });
  });
  platform.joinNode("b");
  platform.leaveNode("b");
  CHECK(seen == std::vector<std::tuple<NodeId, NodeId, bool>>{{"a", "b", true}, {"a", "b", false}});
  CHECK(platform.environment("b") == nullptr);
  CHECK(platform.environment("a") == &a);
  CHECK(platform.aliveNodes() == std::vector<NodeId>{"a"});
  CHECK_THROWS(platform.joinNode("a"));
  // A node may rejoin with a fresh environment.
  auto& again = platform.joinNode("b");
  CHECK(again.state().empty());
}

TEST_CASE("sync kind names round-trip") {
  for (auto k : {SyncKind::fieldSpread, SyncKind::fieldRemove, SyncKind::claimBroadcast, SyncKind::claimRelease,
                 SyncKind::membership, SyncKind::resourceMirror}) {
    CHECK((syncKindFromString(toString(k)) == k));
  }
  CHECK_FALSE(syncKindFromString("gossip").has_value());
}
