#include "situ/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace situ {

std::string formatMetrics(const RunMetrics& m) {
  std::ostringstream out;
  char latency[64];
  std::snprintf(latency, sizeof(latency), "%.6f", m.meanAssignmentLatencyTicks);
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(m.traceHash));
  out << "tasksCompleted " << m.tasksCompleted << '\n'
      << "meanAssignmentLatencyTicks " << latency << '\n'
      << "switchCount " << m.switchCount << '\n'
      << "lockConflictWaitTicks " << m.lockConflictWaitTicks << '\n'
      << "bookingRejectCount " << m.bookingRejectCount << '\n'
      << "traceHash " << hash << '\n'
      << "ticks " << m.ticks << '\n'
      << "seed " << m.seed << '\n'
      << "claimsSubmitted " << m.claimsSubmitted << '\n'
      << "claimsGranted " << m.claimsGranted << '\n'
      << "invariantViolations " << m.invariantViolations << '\n'
      << "vehiclesArrived " << m.vehiclesArrived << '\n'
      << "intentionSwitches " << m.intentionSwitches << '\n'
      << "messagesLost " << m.messagesLost << '\n';
  return out.str();
}

void emitMetrics(const RunMetrics& metrics, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write metrics to " + path.string());
  out << formatMetrics(metrics);
  if (!out.flush()) throw IoError("cannot write metrics to " + path.string());
}

ContentLanguage scenarioLanguage() {
  ContentLanguage lang;
  registerDynCnetSchema(lang);
  registerFieldTaskSchema(lang);
  registerAntSchemas(lang);
  return lang;
}

AgvParams agvParamsFrom(const ScenarioConfig& c, const SegmentGraph& graph) {
  const ProtocolConstants& p = c.protocol;
  AgvParams a;
  a.speedMetersPerTick = p.speed;
  a.timerTicks = p.timer;
  a.delta = p.delta.value_or(graph.meanEdgeLength());
  a.scopeUnitMeters = p.scopeUnit;
  a.fields = FieldParams{p.rangeUnit, p.age};
  a.lookahead = p.lookahead;
  a.batteryCapacity = p.battery;
  a.roamWindow = p.roamWindow;
  a.bindGrace = 2 * c.network.latencyTicks + 2;
  return a;
}

AntParams antParamsFrom(const ScenarioConfig& c) {
  const ProtocolConstants& p = c.protocol;
  AntParams a;
  a.ttl = p.ttl;
  a.refreshPeriod = p.refresh;
  a.explorePeriod = p.explore;
  a.rho = p.rho;
  a.maxDistMeters = p.maxDist;
  a.capacity = p.capacity;
  a.thresholds = p.thresholds;
  a.multipliers = p.multipliers;
  a.speedMetersPerTick = p.speed;
  return a;
}

AgvBehaviour behaviourFrom(const ScenarioConfig& c) {
  auto it = c.lists.find("tree");
  if (it == c.lists.end() || it->second.empty()) return defaultAgvBehaviour();
  try {
    return parseAgvBehaviour(it->second);
  } catch (const Error& e) {
    throw ConfigError(std::string("[tree]: ") + e.what());
  }
}

namespace {

void runAgv(const ScenarioConfig& c, Platform& platform, RunMetrics& m) {
  Kernel& kernel = platform.kernel();
  std::vector<NodeId> parks;
  std::optional<NodeId> charger;
  for (const auto& a : c.agents) {
    if (a.type == "park") parks.push_back(a.node);
    if (a.type == "charger" && !charger) charger = a.node;
  }
  AgvWorld world(platform, agvModeFromString(c.mode), behaviourFrom(c), agvParamsFrom(c, platform.graph()),
                 parks, charger, c.seed);
  for (const auto& a : c.agents) {
    if (a.type == "agv") world.joinAgv(a.id, a.node);
  }
  for (const auto& t : c.tasks) {
    kernel.schedule(EventRecord{0, 0, kWmsNode, "taskArrival",
                                Value{{"dropoff", t.dropoff}, {"pickup", t.pickup}, {"priority", t.priority},
                                      {"task", t.id}, {"type", t.type}}
                                    .dump()},
                    t.arrival, [&world, t] { world.addTask(t); });
  }
  for (const auto& e : c.events) {
    Value payload{{"agent", e.id}};
    if (e.action == "join") payload["node"] = e.node;
    kernel.schedule(EventRecord{0, 0, agvNode(e.id), e.action, payload.dump()}, e.at, [&world, e] {
      if (e.action == "join") {
        world.joinAgv(e.id, e.node);
      } else if (world.agvAlive(e.id)) {
        world.leaveAgv(e.id);
      }
    });
  }
  scheduleRecurring(kernel, 1, 0, [&world] { world.tick(); });
  if (c.ticks > 0) kernel.runUntil(c.ticks - 1);

  m.tasksCompleted = world.floor().delivered();
  std::uint64_t assigned = 0;
  double latency = 0.0;
  for (const auto& [_, ta] : world.transports()) {
    m.switchCount += static_cast<std::uint64_t>(ta->switches());
    if (auto at = ta->assignedTick()) {
      ++assigned;
      latency += static_cast<double>(*at - ta->spec().arrival);
    }
  }
  if (assigned) m.meanAssignmentLatencyTicks = latency / static_cast<double>(assigned);
  m.lockConflictWaitTicks = world.lockWaitTicks();
  m.claimsSubmitted = world.claimsSubmitted();
  m.claimsGranted = world.claimsGranted();
  m.invariantViolations = world.invariantViolations();
}

void runTraffic(const ScenarioConfig& c, Platform& platform, RunMetrics& m) {
  Kernel& kernel = platform.kernel();
  AntParams params = antParamsFrom(c);
  TrafficNetwork network(platform, params);
  network.addInfrastructure();
  for (const auto& b : c.bookings) network.addStaticBooking(b.edge, b.count, b.start, b.end);
  for (const auto& a : c.agents) {
    if (a.type != "vehicle") continue;
    Tick explorePhase = SplitMix64::stream(c.seed, "explore/" + a.id).below(params.explorePeriod);
    Tick cyclePhase = SplitMix64::stream(c.seed, "cycle/" + a.id).below(params.refreshPeriod);
    network.addVehicle(a.id, a.node, a.destination, explorePhase, cyclePhase);
  }
  scheduleRecurring(kernel, 1, 0, [&network] { network.tick(); });
  if (c.ticks > 0) kernel.runUntil(c.ticks - 1);

  for (const auto& v : network.vehicles()) {
    if (v->arrived()) ++m.vehiclesArrived;
    m.intentionSwitches += v->switches();
  }
  m.tasksCompleted = m.vehiclesArrived;
  m.bookingRejectCount = network.bookingRejects();
}

}  // namespace

RunMetrics runScenario(const ScenarioConfig& c, const SegmentGraph& graph, const RunOptions& options) {
  ContentLanguage lang = scenarioLanguage();
  NetworkConfig network = c.network;
  network.seed = c.seed;
  Platform platform(network, graph, lang);
  Kernel& kernel = platform.kernel();
  if (options.traceSink) kernel.setTraceSink(options.traceSink);
  RunMetrics m;
  m.ticks = c.ticks;
  m.seed = c.seed;
  if (c.kind == "agv") {
    runAgv(c, platform, m);
  } else {
    runTraffic(c, platform, m);
  }
  kernel.finalize();
  m.messagesLost = kernel.lostTransmissions() + kernel.droppedTransmissions();
  m.traceHash = kernel.traceHash();
  return m;
}

}  // namespace situ
