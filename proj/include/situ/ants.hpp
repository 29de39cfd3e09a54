#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "situ/agent.hpp"

namespace situ {

inline constexpr const char* kExplorePaths = "ExplorePaths";
inline constexpr const char* kPropagateIntention = "PropagateIntention";

struct BookingEntry {
  std::string agent;  // infrastructure agent
  EdgeId edge = 0;
  Tick start = 0;
  Tick end = 0;
  bool acked = false;

  friend bool operator==(const BookingEntry&, const BookingEntry&) = default;
};

struct Booking {
  std::int64_t bookingId = 0;
  std::string vehicleId;
  std::vector<BookingEntry> entries;
  Tick lastRefreshTick = 0;

  friend bool operator==(const Booking&, const Booking&) = default;
};

Value bookingToValue(const Booking& booking);
Booking bookingFromValue(const Value& value);

struct AntParams {
  Tick ttl = 50;
  Tick refreshPeriod = 20;
  Tick explorePeriod = 20;
  /// Relative improvement needed before an intention is replaced.
  double rho = 0.1;
  double maxDistMeters = 1500.0;
  int capacity = 8;
  CongestionThresholds thresholds;
  /// Path cost multipliers for freeFlow, moderate, congested, jammed.
  std::array<double, 4> multipliers{1.0, 1.5, 2.0, 3.0};
  double speedMetersPerTick = 10.0;
  int commBudget = 256;
};

std::string infrastructureAgentId(const NodeId& graphNode);
NodeId infrastructureNode(const NodeId& graphNode);
NodeId vehicleNode(const std::string& vehicleId);
Tick travelTicks(double lengthMeters, double speedMetersPerTick);
double congestionMultiplier(CongestionStatus status, const AntParams& params);

/// Local reservation of one edge for one booking. Static reservations come
/// from configuration, carry a count and never evaporate.
struct Reservation {
  std::int64_t bookingId = 0;
  std::string vehicleId;
  EdgeId edge = 0;
  Tick start = 0;
  Tick end = 0;
  Tick lastRefresh = 0;
  int count = 1;
  bool permanent = false;

  friend bool operator==(const Reservation&, const Reservation&) = default;
};

std::string reservationKey(EdgeId edge, std::int64_t bookingId);
Value reservationToValue(const Reservation& r);
Reservation reservationFromValue(const Value& v);
std::vector<Reservation> reservationsIn(const VirtualEnvironment& ve);

/// Reservations on `edge` whose window overlaps [start, end], weighted by
/// count, ignoring `excludeBooking`.
int bookedLoad(const VirtualEnvironment& ve, EdgeId edge, Tick start, Tick end,
               std::optional<std::int64_t> excludeBooking = std::nullopt);

CongestionStatus predictCongestion(const VirtualEnvironment& ve, EdgeId edge, Tick start, Tick end,
                                   const CongestionThresholds& thresholds);
/// Status of every edge with reservations, over all windows ending at or
/// after `from`.
std::map<EdgeId, CongestionStatus> predictCongestion(const VirtualEnvironment& ve, Tick from,
                                                     const CongestionThresholds& thresholds);

/// Drops every non-static reservation with now - lastRefresh > ttl. Returns
/// the number removed.
std::size_t evaporateBookings(VirtualEnvironment& ve, Tick now, Tick ttl);

/// Reservation store of an infrastructure node: the "reserve" action, the
/// "traffic" focus and per-tick evaporation.
void installBookingService(VirtualEnvironment& ve, const AntParams& params);

void registerAntSchemas(ContentLanguage& language);

struct ExploreAnt {
  std::string vehicle;
  NodeId origin;
  NodeId destination;
  double maxDist = 0.0;
  std::int64_t budget = 0;
  std::vector<NodeId> trail;
  double distance = 0.0;
  double cost = 0.0;
  Tick eta = 0;
  std::int64_t round = 0;
};

MessageData exploreMessage(const ExploreAnt& ant, const std::string& receiver);
ExploreAnt exploreFromData(const MessageData& data);

struct FoundPath {
  GraphPath path;
  double distance = 0.0;
  double cost = 0.0;
  std::int64_t round = 0;
};

FoundPath foundFromData(const MessageData& data);

/// Conversation key shared by vehicles and infrastructure agents:
/// protocol/vehicle/round for exploration, protocol/vehicle/bookingId for
/// intentions.
std::string antConversationKey(const SituatedAgent& agent, const MessageData& data);

/// Infrastructure agent of one graph node. Relays ants and keeps the
/// reservations of the edges leaving its node.
class InfrastructureAgent : public SituatedAgent {
 public:
  InfrastructureAgent(NodeId graphNode, VirtualEnvironment& ve, AntParams params);

  const NodeId& location() const { return location_; }
  void tick();

  std::vector<MessageData> handleExplorationAnt(const MessageData& ant);
  std::optional<MessageData> handleIntentionAnt(const MessageData& ant);

  std::uint64_t rejectCount() const { return rejects_; }

 private:
  double edgeCost(EdgeId edge, Tick start, Tick end);

  NodeId location_;
  AntParams params_;
  std::shared_ptr<QueuedProtocol> explore_;
  std::shared_ptr<QueuedProtocol> intention_;
  std::uint64_t rejects_ = 0;
};

/// Stub of a vehicle and its driver. Moves node to node along the route it
/// was instructed with, one edge per travelTicks.
class RoadDriver : public ExternalEnvironment {
 public:
  RoadDriver(const SegmentGraph& graph, NodeId start, double speedMetersPerTick);

  /// {type:"location", node, next, eta}: `next` is where plans start and
  /// `eta` the ticks until it is reached.
  Value observe(const Value& observation) override;
  /// {path:[...]} starting at the planning node.
  void operate(const Value& operation) override;
  /// One tick of motion. Returns the node reached, if any.
  std::optional<NodeId> advance();

  const NodeId& lastNode() const { return node_; }
  bool moving() const { return remaining_ > 0; }
  NodeId planningNode() const { return moving() ? target_ : node_; }

 private:
  const SegmentGraph& graph_;
  double speed_;
  NodeId node_;
  NodeId target_;
  Tick remaining_ = 0;
  std::vector<NodeId> route_;
};

/// Vehicle agent running the explore / choose / revise / propagate /
/// instruct loop.
class VehicleAgent : public SituatedAgent {
 public:
  VehicleAgent(std::string id, VirtualEnvironment& ve, NodeId destination, AntParams params,
               Tick explorePhase, Tick cyclePhase);

  void tick();
  void launchExploration();
  void cycle();

  bool arrived() const { return arrived_; }
  const std::optional<GraphPath>& currentIntention() const { return intention_; }
  std::int64_t bookingId() const { return bookingId_; }
  std::uint64_t switches() const { return switches_; }
  std::uint64_t rejects() const { return rejects_; }
  std::uint64_t acks() const { return acks_; }
  std::optional<Tick> arrivalTick() const { return arrivalTick_; }

 private:
  void onPathFound(const MessageData& data);
  void onBookingReply(const MessageData& data);
  std::optional<FoundPath> best(const NodeId& from) const;
  void propagateIntention(Tick eta);

  NodeId destination_;
  AntParams params_;
  Tick nextExplore_;
  Tick nextCycle_;
  std::int64_t round_ = 0;
  std::map<std::int64_t, std::vector<FoundPath>> results_;
  std::optional<GraphPath> intention_;
  std::int64_t bookingId_ = 0;
  bool bookingRejected_ = false;
  bool arrived_ = false;
  std::optional<Tick> arrivalTick_;
  std::uint64_t switches_ = 0;
  std::uint64_t rejects_ = 0;
  std::uint64_t acks_ = 0;
  std::shared_ptr<QueuedProtocol> explore_;
  std::shared_ptr<QueuedProtocol> intentionProtocol_;
};

/// Infrastructure agents for every graph node plus the vehicles, wired onto
/// one platform.
class TrafficNetwork {
 public:
  TrafficNetwork(Platform& platform, AntParams params);

  void addInfrastructure();
  VehicleAgent& addVehicle(const std::string& id, const NodeId& origin, const NodeId& destination,
                           Tick explorePhase, Tick cyclePhase);
  /// Static reservation on every infrastructure node managing `edge`.
  void addStaticBooking(EdgeId edge, int count, Tick start, Tick end);
  void tick();

  InfrastructureAgent* infrastructure(const NodeId& graphNode);
  const std::vector<std::unique_ptr<VehicleAgent>>& vehicles() const { return vehicles_; }
  std::uint64_t bookingRejects() const;
  const AntParams& params() const { return params_; }

 private:
  Platform& platform_;
  AntParams params_;
  std::map<NodeId, std::unique_ptr<InfrastructureAgent>> infrastructure_;
  std::vector<std::unique_ptr<VehicleAgent>> vehicles_;
  std::map<std::string, std::unique_ptr<RoadDriver>> drivers_;
  std::int64_t nextStaticId_ = -1;
};

}  // namespace situ
