#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "situ/content.hpp"
#include "situ/graph.hpp"
#include "situ/kernel.hpp"

namespace situ {

struct Focus {
  std::string name;
  Value params = Value::object();
};

struct Sense {
  std::string agentId;
  Focus focus;
};

struct Action {
  std::string agentId;
  std::string name;
  Value params = Value::object();

  friend bool operator==(const Action&, const Action&) = default;
};

/// Sensed data in raw form; always an object with a "type" member.
using Representation = Value;

enum class SyncKind { fieldSpread, fieldRemove, claimBroadcast, claimRelease, membership, resourceMirror };

const char* toString(SyncKind kind);
std::optional<SyncKind> syncKindFromString(const std::string& text);

struct SynchronizationUpdate {
  SyncKind kind = SyncKind::resourceMirror;
  NodeId origin;
  Items payload;
};

/// Stub for the world outside the software: sensors and actuators.
class ExternalEnvironment {
 public:
  virtual ~ExternalEnvironment() = default;
  virtual Value observe(const Value& observation) = 0;
  /// Effects become visible at a later tick through observe().
  virtual void operate(const Value& operation) = 0;
};

class UnknownFocus : public Error {
 public:
  using Error::Error;
};

class ActionRejected : public Error {
 public:
  using Error::Error;
};

/// Per-node mediation layer between agents and everything else: state
/// repository, perception, action, communication and synchronization.
class VirtualEnvironment {
 public:
  using FocusGenerator = std::function<Representation(const VirtualEnvironment&, const Sense&)>;
  using ObservationBuilder = std::function<Value(const Sense&)>;
  using ObservedInterpreter = std::function<Representation(const Sense&, const Value& observed)>;
  /// Returns the state items to write; throws ActionRejected when the
  /// action's precondition fails.
  using VirtualEffect = std::function<Items(VirtualEnvironment&, const Action&)>;
  using OperationBuilder = std::function<Value(const VirtualEnvironment&, const Action&)>;
  using InboxSink = std::function<void(const Message&)>;
  using SyncItem = std::function<void(VirtualEnvironment&)>;
  using SyncHandler = std::function<void(VirtualEnvironment&, const SynchronizationUpdate&)>;

  VirtualEnvironment(NodeId node, Kernel& kernel, const SegmentGraph& graph,
                     const ContentLanguage& language);
  VirtualEnvironment(const VirtualEnvironment&) = delete;
  VirtualEnvironment& operator=(const VirtualEnvironment&) = delete;

  const NodeId& node() const { return node_; }
  Tick now() const { return kernel_.now(); }
  Kernel& kernel() { return kernel_; }
  const Kernel& kernel() const { return kernel_; }
  const SegmentGraph& graph() const { return graph_; }
  const ContentLanguage& language() const { return language_; }

  // -- state ---------------------------------------------------------------
  Items readState(const Items& templ) const;
  /// Items whose name starts with `prefix`.
  Items readPrefix(const std::string& prefix) const;
  void writeState(const Items& items);
  void eraseState(const std::set<std::string>& names);
  const Items& state() const { return state_; }

  // -- perception ----------------------------------------------------------
  void registerVirtualFocus(const std::string& name, FocusGenerator generator);
  void registerExternalFocus(const std::string& name, ObservationBuilder observation,
                             ObservedInterpreter interpret);
  bool isVirtualFocus(const std::string& name) const;
  Representation sense(const Sense& request) const;

  // -- actions -------------------------------------------------------------
  void registerVirtualAction(const std::string& name, VirtualEffect effect);
  void registerExternalAction(const std::string& name, OperationBuilder builder);
  bool isVirtualAction(const std::string& name) const;
  bool knowsAction(const std::string& name) const;
  void act(const Action& action);

  void setExternal(ExternalEnvironment* external) { external_ = external; }
  ExternalEnvironment* external() const { return external_; }

  // -- communication -------------------------------------------------------
  void addAddress(const std::string& agent, const NodeId& node, const std::string& kind);
  std::optional<NodeId> addressOf(const std::string& agent) const;
  /// Scope and broadcast receivers of `protocol` are resolved among agents of
  /// this kind.
  void registerAudience(const std::string& protocol, const std::string& kind);
  void host(const std::string& agent, InboxSink sink);
  void unhost(const std::string& agent);
  bool hosts(const std::string& agent) const { return hosted_.count(agent) != 0; }

  /// Agents a message would reach, grouped by node (sorted, deterministic).
  std::map<NodeId, std::vector<std::string>> resolveReceivers(const Message& message) const;
  void sendMessage(const Message& message);
  void deliverTransmission(const Transmission& transmission);

  // -- synchronization -----------------------------------------------------
  void registerSyncItem(const std::string& name, SyncItem item);
  void registerSyncHandler(SyncKind kind, SyncHandler handler);
  /// Runs every registered synchronization item once.
  void synchronizeLocal();
  /// Sends `update` to `targets`, or to every other alive node when empty.
  void emitSync(const SynchronizationUpdate& update, const std::vector<NodeId>& targets = {});
  void applySyncUpdate(const SynchronizationUpdate& update);

  std::uint64_t deliveredCount() const { return delivered_.size(); }

 private:
  struct PerceptionType {
    bool isVirtual = true;
    FocusGenerator generate;
    ObservationBuilder observation;
    ObservedInterpreter interpret;
  };
  struct ActionType {
    bool isVirtual = true;
    VirtualEffect effect;
    OperationBuilder operation;
  };
  struct Address {
    NodeId node;
    std::string kind;
  };

  void deliverLocal(const Message& message, const std::string& agent);
  void note(const std::string& kind, const Value& payload);

  NodeId node_;
  Kernel& kernel_;
  const SegmentGraph& graph_;
  const ContentLanguage& language_;
  ExternalEnvironment* external_ = nullptr;

  Items state_;
  std::map<std::string, PerceptionType> perceptionTypes_;
  std::map<std::string, ActionType> actionTypes_;
  std::map<std::string, Address> addresses_;
  std::map<std::string, std::string> audiences_;
  std::map<std::string, InboxSink> hosted_;
  std::vector<std::pair<std::string, SyncItem>> syncItems_;
  std::map<SyncKind, std::vector<SyncHandler>> syncHandlers_;
  std::set<std::pair<std::int64_t, std::string>> delivered_;
};

/// Key of the mirrored position item for an agent.
std::string positionKey(const std::string& agent);

/// Owns the kernel and one virtual environment per alive node. Keeps the
/// address directory that every environment is populated with.
class Platform {
 public:
  using NodeSetup = std::function<void(VirtualEnvironment&)>;

  Platform(NetworkConfig network, const SegmentGraph& graph, const ContentLanguage& language);

  Kernel& kernel() { return kernel_; }
  const SegmentGraph& graph() const { return graph_; }
  const ContentLanguage& language() const { return language_; }

  /// Runs for every environment created after the call (and, once, for the
  /// ones that already exist).
  void addNodeSetup(NodeSetup setup);

  VirtualEnvironment& joinNode(const NodeId& node);
  void leaveNode(const NodeId& node);
  VirtualEnvironment* environment(const NodeId& node);
  std::vector<NodeId> aliveNodes() const { return kernel_.aliveNodes(); }

  void registerAddress(const std::string& agent, const NodeId& node, const std::string& kind);
  void registerAudience(const std::string& protocol, const std::string& kind);

 private:
  Kernel kernel_;
  const SegmentGraph& graph_;
  const ContentLanguage& language_;
  std::map<NodeId, std::unique_ptr<VirtualEnvironment>> environments_;
  // Environments of departed nodes; kept so agents holding references stay valid.
  std::vector<std::unique_ptr<VirtualEnvironment>> retired_;
  std::vector<NodeSetup> setups_;
  std::vector<std::tuple<std::string, NodeId, std::string>> directory_;
  std::map<std::string, std::string> audiences_;
};

}  // namespace situ
