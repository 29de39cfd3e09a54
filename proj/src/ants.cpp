#include "situ/ants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace situ {

Value bookingToValue(const Booking& b) {
  Value entries = Value::array();
  for (const auto& e : b.entries) {
    entries.push_back({{"acked", e.acked}, {"agent", e.agent}, {"edge", e.edge}, {"end", e.end}, {"start", e.start}});
  }
  return {{"bookingId", b.bookingId}, {"entries", entries}, {"lastRefreshTick", b.lastRefreshTick},
          {"vehicleId", b.vehicleId}};
}

Booking bookingFromValue(const Value& v) {
  if (!Domain::booking().admits(v)) throw MalformedMessage("not a booking: " + v.dump());
  Booking b;
  b.bookingId = v.at("bookingId").get<std::int64_t>();
  b.vehicleId = v.at("vehicleId").get<std::string>();
  b.lastRefreshTick = v.at("lastRefreshTick").get<Tick>();
  for (const auto& e : v.at("entries")) {
    b.entries.push_back(BookingEntry{e.at("agent").get<std::string>(), e.at("edge").get<EdgeId>(),
                                     e.at("start").get<Tick>(), e.at("end").get<Tick>(), e.at("acked").get<bool>()});
  }
  return b;
}

std::string infrastructureAgentId(const NodeId& n) { return "ia_" + n; }
NodeId infrastructureNode(const NodeId& n) { return "rsu_" + n; }
NodeId vehicleNode(const std::string& v) { return "veh_" + v; }

Tick travelTicks(double lengthMeters, double speed) {
  if (speed <= 0.0) throw Error("speed must be positive");
  double t = std::ceil(lengthMeters / speed - 1e-9);
  return std::max<Tick>(1, static_cast<Tick>(t));
}

double congestionMultiplier(CongestionStatus status, const AntParams& params) {
  return params.multipliers.at(static_cast<std::size_t>(status));
}

// -- reservations ------------------------------------------------------------

std::string reservationKey(EdgeId edge, std::int64_t bookingId) {
  return "reservation/" + std::to_string(edge) + "/" + std::to_string(bookingId);
}

Value reservationToValue(const Reservation& r) {
  return {{"bookingId", r.bookingId}, {"count", r.count}, {"edge", r.edge}, {"end", r.end},
          {"lastRefresh", r.lastRefresh}, {"permanent", r.permanent}, {"start", r.start},
          {"vehicleId", r.vehicleId}};
}

Reservation reservationFromValue(const Value& v) {
  Reservation r;
  r.bookingId = v.at("bookingId").get<std::int64_t>();
  r.vehicleId = v.value("vehicleId", std::string());
  r.edge = v.at("edge").get<EdgeId>();
  r.start = v.at("start").get<Tick>();
  r.end = v.at("end").get<Tick>();
  r.lastRefresh = v.value("lastRefresh", Tick{0});
  r.count = v.value("count", 1);
  r.permanent = v.value("permanent", false);
  if (r.end < r.start) throw Error("reservation window ends before it starts");
  if (r.count < 1) throw Error("reservation count must be positive");
  return r;
}

std::vector<Reservation> reservationsIn(const VirtualEnvironment& ve) {
  std::vector<Reservation> out;
  for (const auto& [name, value] : ve.readPrefix("reservation/")) out.push_back(reservationFromValue(value));
  return out;
}

int bookedLoad(const VirtualEnvironment& ve, EdgeId edge, Tick start, Tick end,
               std::optional<std::int64_t> excludeBooking) {
  int load = 0;
  for (const auto& r : reservationsIn(ve)) {
    if (r.edge != edge || (excludeBooking && r.bookingId == *excludeBooking)) continue;
    if (r.end < start || r.start > end) continue;
    load += r.count;
  }
  return load;
}

CongestionStatus predictCongestion(const VirtualEnvironment& ve, EdgeId edge, Tick start, Tick end,
                                   const CongestionThresholds& thresholds) {
  return classifyCongestion(bookedLoad(ve, edge, start, end), thresholds);
}

std::map<EdgeId, CongestionStatus> predictCongestion(const VirtualEnvironment& ve, Tick from,
                                                     const CongestionThresholds& thresholds) {
  std::map<EdgeId, int> load;
  for (const auto& r : reservationsIn(ve)) {
    if (r.end < from) continue;
    load[r.edge] += r.count;
  }
  std::map<EdgeId, CongestionStatus> out;
  for (const auto& [edge, n] : load) out[edge] = classifyCongestion(n, thresholds);
  return out;
}

std::size_t evaporateBookings(VirtualEnvironment& ve, Tick now, Tick ttl) {
  std::set<std::string> gone;
  for (const auto& [name, value] : ve.readPrefix("reservation/")) {
    Reservation r = reservationFromValue(value);
    if (r.permanent || now < r.lastRefresh || now - r.lastRefresh <= ttl) continue;
    gone.insert(name);
    ve.kernel().record(ve.node(), "evaporate",
                       Value{{"bookingId", r.bookingId}, {"edge", r.edge}, {"vehicle", r.vehicleId}}.dump());
  }
  ve.eraseState(gone);
  return gone.size();
}

void installBookingService(VirtualEnvironment& ve, const AntParams& params) {
  ve.registerVirtualAction("reserve", [params](VirtualEnvironment& env, const Action& a) {
    Reservation r;
    try {
      r = reservationFromValue(a.params);
    } catch (const std::exception& e) {
      throw ActionRejected(std::string("bad reservation: ") + e.what());
    }
    if (!env.graph().hasEdge(r.edge)) throw ActionRejected("unknown edge " + std::to_string(r.edge));
    int load = bookedLoad(env, r.edge, r.start, r.end, r.bookingId);
    if (load + r.count > params.capacity) {
      throw ActionRejected("capacity exceeded on edge " + std::to_string(r.edge));
    }
    return Items{{reservationKey(r.edge, r.bookingId), reservationToValue(r)}};
  });
  ve.registerVirtualFocus("traffic", [params](const VirtualEnvironment& env, const Sense& s) {
    const Value& p = s.focus.params;
    EdgeId edge = p.at("edge").get<EdgeId>();
    const Edge& e = env.graph().edge(edge);
    int load = bookedLoad(env, edge, p.at("start").get<Tick>(), p.at("end").get<Tick>());
    return Representation{{"averageSpeed", params.speedMetersPerTick},
                          {"density", load},
                          {"intensity", load},
                          {"path", {e.from, e.to}},
                          {"type", "trafficObservation"}};
  });
  ve.registerSyncItem("evaporation", [params](VirtualEnvironment& env) {
    evaporateBookings(env, env.now(), params.ttl);
  });
}

// -- schemas and ant content -------------------------------------------------

void registerAntSchemas(ContentLanguage& lang) {
  constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
  lang.defineTerm("vehicle", Domain::text());
  lang.defineTerm("origin", Domain::text());
  lang.defineTerm("destination", Domain::text());
  lang.defineTerm("maxDist", Domain::nonNegative());
  lang.defineTerm("budget", Domain::integer(0, 1 << 20));
  lang.defineTerm("trail", Domain::path());
  lang.defineTerm("distance", Domain::nonNegative());
  lang.defineTerm("cost", Domain::nonNegative());
  lang.defineTerm("eta", Domain::integer(0, kMax));
  lang.defineTerm("round", Domain::integer(0, kMax));
  lang.defineTerm("path", Domain::path());
  lang.defineTerm("booking", Domain::booking());
  lang.defineTerm("bookingId", Domain::integer(std::numeric_limits<std::int64_t>::min(), kMax));
  lang.defineTerm("reason", Domain::text());
  lang.defineTerm("prefix", Domain::integer(0, 1 << 20));
  lang.definePerformative(kExplorePaths, "explore",
                          {"vehicle", "origin", "destination", "maxDist", "budget", "trail", "distance", "cost",
                           "eta", "round"},
                          true);
  lang.definePerformative(kExplorePaths, "pathFound", {"path", "distance", "cost", "round"});
  lang.definePerformative(kPropagateIntention, "booking", {"booking"}, true);
  lang.definePerformative(kPropagateIntention, "bookingAck", {"booking"});
  lang.definePerformative(kPropagateIntention, "bookingReject", {"bookingId", "reason", "prefix"});
}

MessageData exploreMessage(const ExploreAnt& a, const std::string& receiver) {
  return MessageData{0,
                     "",
                     receiver,
                     kExplorePaths,
                     "explore",
                     {{"vehicle", a.vehicle},
                      {"origin", a.origin},
                      {"destination", a.destination},
                      {"maxDist", a.maxDist},
                      {"budget", a.budget},
                      {"trail", a.trail},
                      {"distance", a.distance},
                      {"cost", a.cost},
                      {"eta", a.eta},
                      {"round", a.round}}};
}

ExploreAnt exploreFromData(const MessageData& d) {
  ExploreAnt a;
  a.vehicle = d.get("vehicle").get<std::string>();
  a.origin = d.get("origin").get<std::string>();
  a.destination = d.get("destination").get<std::string>();
  a.maxDist = d.get("maxDist").get<double>();
  a.budget = d.get("budget").get<std::int64_t>();
  a.trail = d.get("trail").get<std::vector<NodeId>>();
  a.distance = d.get("distance").get<double>();
  a.cost = d.get("cost").get<double>();
  a.eta = d.get("eta").get<Tick>();
  a.round = d.get("round").get<std::int64_t>();
  return a;
}

FoundPath foundFromData(const MessageData& d) {
  return FoundPath{GraphPath{d.get("path").get<std::vector<NodeId>>()}, d.get("distance").get<double>(),
                   d.get("cost").get<double>(), d.get("round").get<std::int64_t>()};
}

std::string antConversationKey(const SituatedAgent& agent, const MessageData& d) {
  const bool atVehicle = agent.kind() == "vehicle";
  std::string vehicle = atVehicle ? agent.id() : d.receiver;
  std::string tag;
  if (d.performative == "explore") {
    vehicle = d.get("vehicle").get<std::string>();
    tag = std::to_string(d.get("round").get<std::int64_t>());
  } else if (d.performative == "pathFound") {
    tag = std::to_string(d.get("round").get<std::int64_t>());
  } else if (d.performative == "booking" || d.performative == "bookingAck") {
    const Value& b = d.get("booking");
    vehicle = b.at("vehicleId").get<std::string>();
    tag = std::to_string(b.at("bookingId").get<std::int64_t>());
  } else {
    tag = std::to_string(d.get("bookingId").get<std::int64_t>());
  }
  return d.protocol + "/" + vehicle + "/" + tag;
}

// -- infrastructure agent ----------------------------------------------------

namespace {

std::vector<std::int64_t> conversationsOf(SituatedAgent& agent, const std::string& protocol) {
  std::vector<std::int64_t> out;
  for (const auto& [id, c] : agent.conversations().all()) {
    if (c.protocol == protocol) out.push_back(id);
  }
  return out;
}

}  // namespace

InfrastructureAgent::InfrastructureAgent(NodeId graphNode, VirtualEnvironment& ve, AntParams params)
    : SituatedAgent(infrastructureAgentId(graphNode), "infrastructure", ve),
      location_(std::move(graphNode)),
      params_(params) {
  addDescription(congestionLevelDescription(params_.thresholds));
  auto finishedAll = [](const std::string& protocol) {
    return [protocol](SituatedAgent& a) { return conversationsOf(a, protocol); };
  };
  explore_ = std::make_shared<QueuedProtocol>(
      kExplorePaths, antConversationKey,
      [this](SituatedAgent&, const Conversation&, const MessageData& d) {
        if (d.performative != "explore") {
          note("protocolViolation", {{"performative", d.performative}});
          return;
        }
        for (auto& m : handleExplorationAnt(d)) explore_->post(std::move(m));
      },
      finishedAll(kExplorePaths));
  intention_ = std::make_shared<QueuedProtocol>(
      kPropagateIntention, antConversationKey,
      [this](SituatedAgent&, const Conversation&, const MessageData& d) {
        if (d.performative != "booking") {
          note("protocolViolation", {{"performative", d.performative}});
          return;
        }
        if (auto m = handleIntentionAnt(d)) intention_->post(std::move(*m));
      },
      finishedAll(kPropagateIntention));
  addProtocol(explore_);
  addProtocol(intention_);
}

void InfrastructureAgent::tick() { communicate(params_.commBudget); }

double InfrastructureAgent::edgeCost(EdgeId edge, Tick start, Tick end) {
  auto notice = perceive(PerceptionRequest{"traffic", Focus{"traffic", {{"edge", edge}, {"start", start}, {"end", end}}},
                                           Filter{}});
  clearNotices();
  auto status = CongestionStatus::freeFlow;
  if (notice.ok) {
    if (auto s = congestionFromString(notice.percept.at("trafficState").at("status").get<std::string>())) status = *s;
  }
  return env().graph().edge(edge).lengthMeters * congestionMultiplier(status, params_);
}

std::vector<MessageData> InfrastructureAgent::handleExplorationAnt(const MessageData& d) {
  ExploreAnt ant = exploreFromData(d);
  if (ant.trail.empty() || ant.trail.back() != location_) {
    note("protocolViolation", {{"reason", "ant not at this node"}});
    return {};
  }
  if (location_ == ant.destination) {
    return {MessageData{0,
                        "",
                        ant.vehicle,
                        kExplorePaths,
                        "pathFound",
                        {{"path", ant.trail}, {"distance", ant.distance}, {"cost", ant.cost}, {"round", ant.round}}}};
  }
  if (ant.budget <= 0) {
    note("antExpired", {{"round", ant.round}, {"vehicle", ant.vehicle}});
    return {};
  }
  const SegmentGraph& graph = env().graph();
  std::vector<MessageData> out;
  for (const auto& adj : graph.adjacent(location_)) {
    if (std::find(ant.trail.begin(), ant.trail.end(), adj.node) != ant.trail.end()) continue;
    double length = graph.edge(adj.edge).lengthMeters;
    if (ant.distance + length > ant.maxDist + kLengthSlack) continue;
    Tick travel = travelTicks(length, params_.speedMetersPerTick);
    ExploreAnt next = ant;
    next.budget = ant.budget - 1;
    next.trail.push_back(adj.node);
    next.distance = ant.distance + length;
    next.cost = ant.cost + edgeCost(adj.edge, ant.eta, ant.eta + travel - 1);
    next.eta = ant.eta + travel;
    out.push_back(exploreMessage(next, infrastructureAgentId(adj.node)));
  }
  return out;
}

std::optional<MessageData> InfrastructureAgent::handleIntentionAnt(const MessageData& d) {
  Booking b = bookingFromValue(d.get("booking"));
  auto pos = std::find_if(b.entries.begin(), b.entries.end(), [](const BookingEntry& e) { return !e.acked; });
  if (pos == b.entries.end() || pos->agent != id()) {
    note("protocolViolation", {{"bookingId", b.bookingId}, {"reason", "not the next entry"}});
    return std::nullopt;
  }
  auto index = static_cast<std::int64_t>(pos - b.entries.begin());
  auto reject = [&](const std::string& reason) {
    ++rejects_;
    note("bookingReject", {{"bookingId", b.bookingId}, {"prefix", index}, {"reason", reason}});
    return MessageData{0,
                       "",
                       b.vehicleId,
                       kPropagateIntention,
                       "bookingReject",
                       {{"bookingId", b.bookingId}, {"reason", reason}, {"prefix", index}}};
  };
  const SegmentGraph& graph = env().graph();
  if (!graph.hasEdge(pos->edge)) return reject("unknown edge");
  const Edge& edge = graph.edge(pos->edge);
  bool managed = edge.from == location_ || (!graph.directed() && edge.to == location_);
  if (!managed) return reject("edge not managed here");
  Reservation r{b.bookingId, b.vehicleId, pos->edge, pos->start, pos->end, b.lastRefreshTick, 1, false};
  try {
    act(Action{id(), "reserve", reservationToValue(r)});
  } catch (const ActionRejected& e) {
    return reject(e.what());
  }
  pos->acked = true;
  ++pos;
  if (pos != b.entries.end()) {
    return MessageData{0, "", pos->agent, kPropagateIntention, "booking", {{"booking", bookingToValue(b)}}};
  }
  return MessageData{0, "", b.vehicleId, kPropagateIntention, "bookingAck", {{"booking", bookingToValue(b)}}};
}

// -- road driver -------------------------------------------------------------

RoadDriver::RoadDriver(const SegmentGraph& graph, NodeId start, double speed)
    : graph_(graph), speed_(speed), node_(std::move(start)) {}

Value RoadDriver::observe(const Value&) {
  return {{"eta", remaining_}, {"moving", moving()}, {"next", planningNode()}, {"node", node_},
          {"type", "location"}};
}

void RoadDriver::operate(const Value& op) {
  auto path = op.at("path").get<std::vector<NodeId>>();
  if (path.empty() || path.front() != planningNode()) throw ActionRejected("route does not start at the vehicle");
  route_.assign(path.begin() + 1, path.end());
}

std::optional<NodeId> RoadDriver::advance() {
  std::optional<NodeId> reached;
  if (remaining_ > 0 && --remaining_ == 0) {
    node_ = target_;
    reached = node_;
  }
  if (remaining_ == 0 && !route_.empty()) {
    NodeId next = route_.front();
    route_.erase(route_.begin());
    auto edge = graph_.edgeBetween(node_, next);
    if (!edge) {
      route_.clear();
      return reached;
    }
    target_ = next;
    remaining_ = travelTicks(graph_.edge(*edge).lengthMeters, speed_);
  }
  return reached;
}

// -- vehicle agent -----------------------------------------------------------

namespace {

Description locationDescription() {
  return Description{
      "Location",
      [](const Representation& rep) { return rep.is_object() && rep.value("type", "") == "location"; },
      [](const Representation& rep) {
        return Items{{"position", rep["node"]}, {"planningNode", rep["next"]}, {"eta", rep["eta"]},
                     {"moving", rep["moving"]}};
      }};
}

bool cheaper(const FoundPath& a, const FoundPath& b) {
  return std::tie(a.cost, a.distance, a.path) < std::tie(b.cost, b.distance, b.path);
}

}  // namespace

VehicleAgent::VehicleAgent(std::string id, VirtualEnvironment& ve, NodeId destination, AntParams params,
                           Tick explorePhase, Tick cyclePhase)
    : SituatedAgent(std::move(id), "vehicle", ve),
      destination_(std::move(destination)),
      params_(params),
      nextExplore_(ve.now() + explorePhase),
      nextCycle_(ve.now() + cyclePhase) {
  addDescription(locationDescription());
  knowledge().write({{"destination", destination_}});
  explore_ = std::make_shared<QueuedProtocol>(
      kExplorePaths, antConversationKey,
      [this](SituatedAgent&, const Conversation&, const MessageData& d) {
        if (d.performative == "pathFound") {
          onPathFound(d);
        } else {
          note("protocolViolation", {{"performative", d.performative}});
        }
      },
      [this](SituatedAgent& a) {
        std::vector<std::int64_t> out;
        for (const auto& [cid, c] : a.conversations().all()) {
          if (c.protocol != kExplorePaths) continue;
          auto round = std::stoll(c.key.substr(c.key.rfind('/') + 1));
          if (round + 2 < round_) out.push_back(cid);
        }
        return out;
      });
  intentionProtocol_ = std::make_shared<QueuedProtocol>(
      kPropagateIntention, antConversationKey,
      [this](SituatedAgent&, const Conversation&, const MessageData& d) { onBookingReply(d); });
  addProtocol(explore_);
  addProtocol(intentionProtocol_);
}

void VehicleAgent::tick() {
  if (arrived_) return;
  communicate(params_.commBudget);
  auto notice = perceive(PerceptionRequest{"location", Focus{"location"}, Filter{}});
  clearNotices();
  if (!notice.ok) return;
  const Items& k = knowledge().all();
  if (!k.at("moving").get<bool>() && k.at("position") == destination_) {
    arrived_ = true;
    arrivalTick_ = env().now();
    note("arrived", {{"node", destination_}});
    return;
  }
  Tick now = env().now();
  if (now >= nextExplore_) {
    launchExploration();
    nextExplore_ = now + params_.explorePeriod;
  }
  if (now >= nextCycle_) {
    cycle();
    nextCycle_ = now + params_.refreshPeriod;
  }
  communicate(params_.commBudget);
}

void VehicleAgent::launchExploration() {
  const Items& k = knowledge().all();
  NodeId from = k.at("planningNode").get<std::string>();
  if (from == destination_) return;
  ++round_;
  ExploreAnt ant;
  ant.vehicle = id();
  ant.origin = from;
  ant.destination = destination_;
  ant.maxDist = params_.maxDistMeters;
  ant.budget = static_cast<std::int64_t>(env().graph().nodes().size()) - 1;
  ant.trail = {from};
  ant.eta = env().now() + k.at("eta").get<Tick>();
  ant.round = round_;
  explore_->post(exploreMessage(ant, infrastructureAgentId(from)));
}

void VehicleAgent::onPathFound(const MessageData& d) {
  FoundPath f = foundFromData(d);
  results_[f.round].push_back(std::move(f));
  while (!results_.empty() && results_.begin()->first + 2 < round_) results_.erase(results_.begin());
}

void VehicleAgent::onBookingReply(const MessageData& d) {
  if (d.performative == "bookingAck") {
    Booking b = bookingFromValue(d.get("booking"));
    if (b.bookingId == bookingId_) {
      ++acks_;
      knowledge().write({{"booked", b.bookingId}});
    }
  } else if (d.performative == "bookingReject") {
    ++rejects_;
    if (d.get("bookingId").get<std::int64_t>() == bookingId_) bookingRejected_ = true;
  } else {
    note("protocolViolation", {{"performative", d.performative}});
  }
}

std::optional<FoundPath> VehicleAgent::best(const NodeId& from) const {
  for (auto it = results_.rbegin(); it != results_.rend(); ++it) {
    std::optional<FoundPath> out;
    for (const auto& f : it->second) {
      if (f.path.nodes.front() != from) continue;
      if (!out || cheaper(f, *out)) out = f;
    }
    if (out) return out;
  }
  return std::nullopt;
}

void VehicleAgent::cycle() {
  const Items& k = knowledge().all();
  NodeId from = k.at("planningNode").get<std::string>();
  Tick eta = k.at("eta").get<Tick>();
  std::optional<GraphPath> suffix;
  if (intention_) {
    auto at = std::find(intention_->nodes.begin(), intention_->nodes.end(), from);
    if (at != intention_->nodes.end()) suffix = GraphPath{std::vector<NodeId>(at, intention_->nodes.end())};
  }
  auto candidate = from == destination_ ? std::nullopt : best(from);
  if (!candidate) {
    if (from != destination_) note("warning", {{"reason", "no feasible path"}});
  } else {
    std::optional<double> currentCost;
    if (suffix) {
      for (auto it = results_.rbegin(); it != results_.rend() && !currentCost; ++it) {
        bool sameRound = std::any_of(it->second.begin(), it->second.end(),
                                     [&](const FoundPath& f) { return f.path == candidate->path; });
        if (!sameRound) continue;
        for (const auto& f : it->second) {
          if (f.path == *suffix) currentCost = f.cost;
        }
        break;
      }
    }
    bool adopt = !suffix || !currentCost;
    if (!adopt && candidate->path != *suffix) {
      double improvement = *currentCost - candidate->cost;
      adopt = bookingRejected_ || (improvement > 0.0 && improvement >= params_.rho * *currentCost);
    }
    if (adopt && (!suffix || candidate->path != *suffix)) {
      if (intention_) {
        ++switches_;
        note("intentionSwitch", {{"from", intention_->nodes}, {"oldBooking", bookingId_}, {"to", candidate->path.nodes}});
      }
      intention_ = candidate->path;
      bookingId_ = nextMessageId();
      bookingRejected_ = false;
      knowledge().write({{"currentIntention", intention_->nodes}});
    } else if (suffix) {
      intention_ = suffix;
    }
  }
  bool planned = intention_ && intention_->nodes.front() == from;
  if (!planned && !k.at("moving").get<bool>()) return;
  propagateIntention(eta);
  if (planned && intention_->nodes.size() > 1) act(Action{id(), "instructDriver", {{"path", intention_->nodes}}});
}

void VehicleAgent::propagateIntention(Tick eta) {
  const SegmentGraph& graph = env().graph();
  const Items& k = knowledge().all();
  Booking b;
  b.bookingId = bookingId_;
  b.vehicleId = id();
  b.lastRefreshTick = env().now();
  Tick t = env().now() + eta;
  if (k.at("moving").get<bool>()) {
    // The edge under the vehicle stays booked until it is left.
    NodeId at = k.at("position").get<std::string>();
    NodeId next = k.at("planningNode").get<std::string>();
    auto edge = graph.edgeBetween(at, next);
    if (!edge) throw Error("vehicle is not on an edge");
    b.entries.push_back(BookingEntry{infrastructureAgentId(at), *edge, env().now(), t - 1, false});
  }
  const NodeId& from = k.at("planningNode").get_ref<const std::string&>();
  const bool planned = intention_ && intention_->nodes.front() == from;
  for (std::size_t i = 0; planned && i + 1 < intention_->nodes.size(); ++i) {
    auto edge = graph.edgeBetween(intention_->nodes[i], intention_->nodes[i + 1]);
    if (!edge) throw Error("intention is not a path");
    Tick travel = travelTicks(graph.edge(*edge).lengthMeters, params_.speedMetersPerTick);
    b.entries.push_back(BookingEntry{infrastructureAgentId(intention_->nodes[i]), *edge, t, t + travel - 1, false});
    t += travel;
  }
  if (b.entries.empty()) return;
  intentionProtocol_->post(MessageData{0, "", b.entries.front().agent, kPropagateIntention, "booking",
                                       {{"booking", bookingToValue(b)}}});
}

// -- traffic network ---------------------------------------------------------

TrafficNetwork::TrafficNetwork(Platform& platform, AntParams params) : platform_(platform), params_(params) {
  platform_.registerAudience(kExplorePaths, "infrastructure");
  platform_.registerAudience(kPropagateIntention, "infrastructure");
}

void TrafficNetwork::addInfrastructure() {
  const SegmentGraph& graph = platform_.graph();
  for (const auto& n : graph.nodes()) {
    platform_.registerAddress(infrastructureAgentId(n), infrastructureNode(n), "infrastructure");
  }
  for (const auto& n : graph.nodes()) {
    VirtualEnvironment& ve = platform_.joinNode(infrastructureNode(n));
    installBookingService(ve, params_);
    auto agent = std::make_unique<InfrastructureAgent>(n, ve, params_);
    InfrastructureAgent* raw = agent.get();
    ve.host(raw->id(), [raw](const Message& m) { raw->receive(m); });
    infrastructure_[n] = std::move(agent);
  }
}

VehicleAgent& TrafficNetwork::addVehicle(const std::string& id, const NodeId& origin, const NodeId& destination,
                                         Tick explorePhase, Tick cyclePhase) {
  const SegmentGraph& graph = platform_.graph();
  if (!graph.hasNode(origin) || !graph.hasNode(destination)) throw Error("vehicle " + id + " has unknown nodes");
  platform_.registerAddress(id, vehicleNode(id), "vehicle");
  VirtualEnvironment& ve = platform_.joinNode(vehicleNode(id));
  auto driver = std::make_unique<RoadDriver>(graph, origin, params_.speedMetersPerTick);
  ve.setExternal(driver.get());
  ve.registerExternalFocus(
      "location", [](const Sense&) { return Value{{"what", "location"}}; },
      [](const Sense&, const Value& observed) { return observed; });
  ve.registerExternalAction("instructDriver", [](const VirtualEnvironment&, const Action& a) { return a.params; });
  drivers_[id] = std::move(driver);
  auto agent = std::make_unique<VehicleAgent>(id, ve, destination, params_, explorePhase, cyclePhase);
  VehicleAgent* raw = agent.get();
  ve.host(id, [raw](const Message& m) { raw->receive(m); });
  vehicles_.push_back(std::move(agent));
  return *raw;
}

void TrafficNetwork::addStaticBooking(EdgeId edge, int count, Tick start, Tick end) {
  const SegmentGraph& graph = platform_.graph();
  const Edge& e = graph.edge(edge);
  std::vector<NodeId> managers{e.from};
  if (!graph.directed()) managers.push_back(e.to);
  Reservation r{nextStaticId_--, "", edge, start, end, 0, count, true};
  for (const auto& n : managers) {
    if (auto* ve = platform_.environment(infrastructureNode(n))) {
      ve->writeState({{reservationKey(edge, r.bookingId), reservationToValue(r)}});
    }
  }
}

void TrafficNetwork::tick() {
  for (auto& [node, ia] : infrastructure_) {
    VirtualEnvironment* ve = platform_.environment(infrastructureNode(node));
    if (!ve) continue;
    ve->synchronizeLocal();
    ia->tick();
  }
  for (auto& v : vehicles_) {
    if (!platform_.environment(vehicleNode(v->id())) || v->arrived()) continue;
    RoadDriver& driver = *drivers_.at(v->id());
    if (auto reached = driver.advance()) {
      platform_.kernel().record(vehicleNode(v->id()), "vehicleAt",
                                Value{{"node", *reached}, {"vehicle", v->id()}}.dump());
    }
    v->tick();
  }
}

InfrastructureAgent* TrafficNetwork::infrastructure(const NodeId& graphNode) {
  auto it = infrastructure_.find(graphNode);
  return it == infrastructure_.end() ? nullptr : it->second.get();
}

std::uint64_t TrafficNetwork::bookingRejects() const {
  std::uint64_t n = 0;
  for (const auto& [node, ia] : infrastructure_) n += ia->rejectCount();
  return n;
}

}  // namespace situ
