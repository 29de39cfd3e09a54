#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "situ/agent.hpp"

namespace situ {

inline constexpr const char* kDynCnet = "DynCNET";

enum class InitiatorPhase { Active, Assigned, Switching, Executing, Completed };
enum class ParticipantPhase { Idle, Voting, Intentional, Bound };

const char* toString(InitiatorPhase phase);
const char* toString(ParticipantPhase phase);

struct Proposal {
  std::string agvId;
  double cost = 0.0;
  std::string taskId;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

struct DynCnetParams {
  /// Minimum cost improvement that justifies a switch.
  double delta = 0.0;
};

/// Transport-agent side. While Switching the initiator has aborted the old
/// winner and waits for its retract before accepting the new candidate.
struct InitiatorState {
  InitiatorPhase phase = InitiatorPhase::Active;
  bool ready = false;
  std::string taskId;
  std::string taskType = "regular";
  int priority = 1;
  NodeId location;
  std::string scope = "all";  // receiver expression for cfp
  std::optional<std::string> provisionalWinner;
  std::optional<Proposal> bestProposal;
  std::optional<std::string> pendingWinner;
  std::map<std::string, double> proposals;  // current offers by AGV
  Tick cfpTimerTicks = 10;
  int switches = 0;

  friend bool operator==(const InitiatorState&, const InitiatorState&) = default;
};

struct InitiatorEvent {
  enum class Kind { taskReady, timerFired, proposalReceived, boundReceived, retractReceived,
                    taskCompleted, agvInOutScope };
  Kind kind = Kind::timerFired;
  std::string agent;
  double cost = 0.0;
  bool entered = true;  // agvInOutScope: entered or left
};

/// AGV side. `initiator` is the transport agent of the provisional task.
struct ParticipantState {
  ParticipantPhase phase = ParticipantPhase::Idle;
  std::optional<std::string> provisionalTask;
  std::optional<std::string> initiator;
  std::map<std::string, double> costs;         // by initiator, as proposed
  std::map<std::string, std::string> taskOf;   // initiator -> task id

  friend bool operator==(const ParticipantState&, const ParticipantState&) = default;
};

struct ParticipantEvent {
  enum class Kind { readyToWork, cfpReceived, provisionalAcceptReceived, abortReceived, taskStarted,
                    taskFinished, taskInOutScope };
  Kind kind = Kind::readyToWork;
  std::string from;  // initiator
  std::string taskId;
  double cost = 0.0;  // cfpReceived: distance to the task location
};

struct Outgoing {
  std::string receiver;
  std::string performative;
  Value content = Value::array();

  friend bool operator==(const Outgoing&, const Outgoing&) = default;
};

template <typename S>
struct StepResult {
  S state;
  std::vector<Outgoing> messages;
  std::vector<std::string> violations;
};

StepResult<InitiatorState> initiatorStep(const InitiatorState& s, const InitiatorEvent& e,
                                         const DynCnetParams& params);
StepResult<ParticipantState> participantStep(const ParticipantState& s, const ParticipantEvent& e,
                                             const DynCnetParams& params);

double cfpScopeMeters(int priority, double scopeUnitMeters);
std::string scopeExpression(double meters);

/// Agents whose position lies within `scopeMeters` path distance of `center`.
std::set<std::string> scopeMembers(const NodeId& center, double scopeMeters,
                                   const std::map<std::string, NodeId>& positions,
                                   const SegmentGraph& graph);

/// Terms and performatives of DynCNET.
void registerDynCnetSchema(ContentLanguage& language);

/// Checks conversation histories against the pairwise DynCNET automaton.
/// `self` is the agent owning the history.
struct ConformanceResult {
  bool ok = true;
  std::string reason;
};
ConformanceResult checkConformance(const std::string& self, const std::vector<MessageData>& history);

/// Communication handlers wrapping the automata.
class InitiatorHandler : public ProtocolHandler {
 public:
  InitiatorHandler(InitiatorState initial, DynCnetParams params);
  std::string protocol() const override { return kDynCnet; }
  std::string conversationKey(const SituatedAgent& agent, const MessageData& data) const override;
  void incoming(SituatedAgent& agent, const Conversation& c, const MessageData& data) override;
  std::optional<MessageData> outgoing(SituatedAgent& agent) override;
  std::vector<std::int64_t> finished(SituatedAgent& agent) override;

  void fire(SituatedAgent& agent, const InitiatorEvent& event);
  const InitiatorState& state() const { return state_; }
  InitiatorState& mutableState() { return state_; }

 private:
  InitiatorState state_;
  DynCnetParams params_;
  std::deque<Outgoing> queue_;
};

class ParticipantHandler : public ProtocolHandler {
 public:
  using CostFn = std::function<double(const NodeId& location)>;

  ParticipantHandler(DynCnetParams params, CostFn cost);
  std::string protocol() const override { return kDynCnet; }
  std::string conversationKey(const SituatedAgent& agent, const MessageData& data) const override;
  void incoming(SituatedAgent& agent, const Conversation& c, const MessageData& data) override;
  std::optional<MessageData> outgoing(SituatedAgent& agent) override;
  std::vector<std::int64_t> finished(SituatedAgent& agent) override;

  void fire(SituatedAgent& agent, const ParticipantEvent& event);
  const ParticipantState& state() const { return state_; }
  /// Task locations learned from cfps, by initiator.
  const std::map<std::string, NodeId>& locations() const { return locations_; }

 private:
  ParticipantState state_;
  DynCnetParams params_;
  CostFn cost_;
  std::deque<Outgoing> queue_;
  std::map<std::string, NodeId> locations_;
  std::set<std::string> done_;
};

/// Explicit-state exploration of two initiators and two participants over
/// per-channel FIFO links with arbitrary interleaving.
struct DynCnetCheckConfig {
  double costs[2][2] = {{100, 200}, {200, 100}};  // [agv][task]
  double delta = 50.0;
  /// Timer firings allowed per initiator outside quiescence.
  int timerBudget = 1;
};

struct DynCnetCheckResult {
  std::uint64_t states = 0;
  std::uint64_t terminalStates = 0;
  std::uint64_t transitions = 0;
  bool cycle = false;
  std::vector<std::string> safetyViolations;
  std::vector<std::string> badTerminals;
  /// Runs in which two different AGVs were bound to one task at different
  /// times (abort crossing a bound).
  std::uint64_t rebinds = 0;
  bool ok() const { return !cycle && safetyViolations.empty() && badTerminals.empty(); }
};

DynCnetCheckResult checkDynCnet(const DynCnetCheckConfig& config);

}  // namespace situ
