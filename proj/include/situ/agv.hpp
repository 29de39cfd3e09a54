#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "situ/config.hpp"
#include "situ/dyncnet.hpp"
#include "situ/fields.hpp"
#include "situ/freeflow.hpp"
#include "situ/locking.hpp"

namespace situ {

inline constexpr const char* kFieldTask = "FieldTask";
inline constexpr const char* kWmsNode = "wms";

enum class AgvMode { dyncnet, fields, roam };
AgvMode agvModeFromString(const std::string& text);

struct AgvParams {
  double speedMetersPerTick = 10.0;
  Tick timerTicks = 10;
  double delta = 0.0;
  double scopeUnitMeters = 50.0;
  FieldParams fields;
  std::size_t lookahead = 3;
  int batteryCapacity = 1000;
  Tick roamWindow = 200;
  /// Ticks between sending bound and picking the load, long enough for an
  /// abort that crossed the bound to arrive.
  Tick bindGrace = 2;
};

NodeId agvNode(const std::string& agv);
std::string transportAgentId(const std::string& taskId);

/// The physical side of the warehouse: AGV bodies, loads and chargers.
class WarehouseFloor {
 public:
  struct Body {
    NodeId node;
    std::optional<EdgeId> edge;
    NodeId target;
    Tick remaining = 0;
    std::optional<std::string> carrying;
    int battery = 0;
  };
  struct Load {
    NodeId pickup;
    NodeId dropoff;
    std::optional<std::string> carrier;
    bool delivered = false;
  };

  WarehouseFloor(const SegmentGraph& graph, double speedMetersPerTick, int batteryCapacity,
                 std::set<NodeId> chargers);

  void addBody(const std::string& agv, const NodeId& node);
  void removeBody(const std::string& agv);
  void addLoad(const std::string& taskId, const NodeId& pickup, const NodeId& dropoff);
  /// One tick of motion for every moving body.
  void advance();

  /// {type:"body", node, moving, edge, battery, carrying, dropoff}.
  Value observe(const std::string& agv) const;
  /// {op:"move", edge, to} | {op:"pick", node, task} | {op:"drop", node} |
  /// {op:"charge"}. Throws ActionRejected when the body cannot comply.
  void operate(const std::string& agv, const Value& operation);

  const std::map<std::string, Body>& bodies() const { return bodies_; }
  const std::map<std::string, Load>& loads() const { return loads_; }
  std::uint64_t delivered() const { return delivered_; }

 private:
  const SegmentGraph& graph_;
  double speed_;
  int batteryCapacity_;
  std::set<NodeId> chargers_;
  std::map<std::string, Body> bodies_;
  std::map<std::string, Load> loads_;
  std::uint64_t delivered_ = 0;
};

class AgvBody : public ExternalEnvironment {
 public:
  AgvBody(WarehouseFloor& floor, std::string agv) : floor_(floor), agv_(std::move(agv)) {}
  Value observe(const Value&) override { return floor_.observe(agv_); }
  void operate(const Value& operation) override { floor_.operate(agv_, operation); }

 private:
  WarehouseFloor& floor_;
  std::string agv_;
};

/// Roles and commitments of an AGV agent.
struct AgvBehaviour {
  std::vector<FreeFlowTree> roles;
  std::vector<SituatedCommitment> commitments;
};

/// Stimulus and commitment predicates a tree definition can name.
const std::map<std::string, std::function<bool(const Items&)>>& agvPredicates();

/// Tree definition lines:
///   role <name> top <id> weight <w>
///   node <id> | action <id> <name>
///   edge <parent> <child> <weight>
///   stimulus <predicate> <target> <magnitude>
///   commitment <name> <sourceRole> <targetRole> <predicate>
/// node/action/edge/stimulus lines belong to the preceding role.
AgvBehaviour parseAgvBehaviour(const std::vector<std::string>& lines);
const std::vector<std::string>& defaultAgvTreeLines();
AgvBehaviour defaultAgvBehaviour();

void registerFieldTaskSchema(ContentLanguage& language);

class AgvAgent : public SituatedAgent {
 public:
  AgvAgent(std::string id, VirtualEnvironment& ve, AgvMode mode, AgvBehaviour behaviour,
           AgvParams params, std::int64_t index, std::optional<NodeId> charger);

  void tick();
  /// Roam mode: a self-generated trip.
  void assignTrip(const std::string& taskId, const NodeId& pickup, const NodeId& dropoff);

  bool hasTask() const { return task_.has_value(); }
  const std::optional<Value>& task() const { return task_; }
  ParticipantHandler* participant() { return participant_.get(); }
  std::uint64_t claimsSubmitted() const { return claimsSubmitted_; }
  std::uint64_t deliveries() const { return deliveries_; }
  std::uint64_t rejectedActions() const { return rejectedActions_; }
  /// Selected high-level action and the reason of the last refinement.
  const std::string& lastSelection() const { return lastSelection_; }
  const std::string& lastReason() const { return lastReason_; }

 private:
  void perceiveAll();
  void syncTaskFromProtocol();
  void requestFieldTask();
  void onFieldTaskReply(const MessageData& data);
  bool perform(Action action);

  AgvMode mode_;
  ActionSelector selector_;
  AgvParams params_;
  std::int64_t index_;
  std::optional<NodeId> charger_;
  std::optional<Value> task_;
  std::optional<EdgeId> transit_;
  std::int64_t projectionCounter_ = 0;
  std::optional<Tick> boundTick_;
  std::optional<std::string> awaitingTask_;
  Tick awaitingSince_ = 0;
  std::set<std::string> deniedTasks_;
  std::string mirroredPosition_;
  std::shared_ptr<ParticipantHandler> participant_;
  std::shared_ptr<QueuedProtocol> fieldTask_;
  std::uint64_t claimsSubmitted_ = 0;
  std::uint64_t deliveries_ = 0;
  std::uint64_t rejectedActions_ = 0;
  std::string lastSelection_;
  std::string lastReason_;
};

/// Transport agent of one task, hosted on the warehouse management node.
class TransportAgent : public SituatedAgent {
 public:
  TransportAgent(TaskSpec task, VirtualEnvironment& ve, AgvMode mode, AgvParams params, Tick timerPhase);

  void tick();

  const TaskSpec& spec() const { return task_; }
  InitiatorHandler* initiator() { return initiator_.get(); }
  bool completed() const { return completed_; }
  std::optional<Tick> assignedTick() const { return assignedTick_; }
  const std::optional<std::string>& assignee() const { return assignee_; }
  int switches() const { return initiator_ ? initiator_->state().switches : 0; }

 private:
  void onTake(const MessageData& data);
  int currentPriority() const;

  TaskSpec task_;
  AgvMode mode_;
  AgvParams params_;
  Tick readyTick_;
  Tick nextTimer_;
  bool started_ = false;
  bool completed_ = false;
  std::optional<Tick> assignedTick_;
  std::optional<std::string> assignee_;
  std::set<std::string> departed_;
  std::shared_ptr<InitiatorHandler> initiator_;
  std::shared_ptr<QueuedProtocol> fieldTask_;
};

/// The warehouse scenario: AGVs on their own nodes, transport agents on
/// the management node, one physical floor.
class AgvWorld {
 public:
  AgvWorld(Platform& platform, AgvMode mode, AgvBehaviour behaviour, AgvParams params,
           std::vector<NodeId> parkLocations, std::optional<NodeId> charger, std::uint64_t seed);

  AgvAgent& joinAgv(const std::string& id, const NodeId& node);
  void leaveAgv(const std::string& id);
  void addTask(const TaskSpec& task);
  /// Physical motion, then transport agents, then AGVs, then the safety
  /// checks.
  void tick();

  Platform& platform() { return platform_; }
  WarehouseFloor& floor() { return floor_; }
  AgvAgent* agv(const std::string& id);
  TransportAgent* transport(const std::string& taskId);
  const std::map<std::string, std::unique_ptr<AgvAgent>>& agvs() const { return agvs_; }
  const std::map<std::string, std::unique_ptr<TransportAgent>>& transports() const { return transports_; }
  bool agvAlive(const std::string& id) const;

  std::uint64_t claimsSubmitted() const;
  std::uint64_t claimsGranted() const { return claimsGranted_; }
  std::uint64_t lockWaitTicks() const { return lockWaitTicks_; }
  std::uint64_t overlapTicks() const { return overlapTicks_; }
  std::uint64_t unlockedMoves() const { return unlockedMoves_; }
  std::uint64_t invariantViolations() const { return overlapTicks_ + unlockedMoves_; }

 private:
  void checkSafety();

  Platform& platform_;
  AgvMode mode_;
  AgvBehaviour behaviour_;
  AgvParams params_;
  std::vector<NodeId> parkLocations_;
  std::optional<NodeId> charger_;
  std::uint64_t seed_;
  WarehouseFloor floor_;
  std::map<std::string, std::unique_ptr<AgvAgent>> agvs_;
  std::map<std::string, std::unique_ptr<AgvBody>> bodies_;
  std::map<std::string, std::unique_ptr<TransportAgent>> transports_;
  std::map<std::string, std::shared_ptr<LockService>> locks_;
  std::int64_t nextIndex_ = 0;
  std::uint64_t tripCounter_ = 0;
  std::uint64_t claimsGranted_ = 0;
  std::uint64_t lockWaitTicks_ = 0;
  std::uint64_t overlapTicks_ = 0;
  std::uint64_t unlockedMoves_ = 0;
};

}  // namespace situ
