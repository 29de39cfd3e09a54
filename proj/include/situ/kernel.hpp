#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "situ/value.hpp"

namespace situ {

using Tick = std::uint64_t;
using NodeId = std::string;

/// Pseudo node names used for records that belong to no simulated node.
inline constexpr const char* kKernelNode = "kernel";
inline constexpr const char* kNetNode = "net";

struct EventRecord {
  Tick tick = 0;
  std::uint64_t seq = 0;
  NodeId node;
  std::string kind;
  std::string payload;  // canonical text
};

/// `tick seq node kind payload`, no trailing newline.
std::string formatRecord(const EventRecord& record);

struct NetworkConfig {
  Tick latencyTicks = 0;
  double dropProbability = 0.0;
  std::uint64_t seed = 0;
};

struct Transmission {
  NodeId from;
  NodeId to;
  std::string data;
};

class KernelError : public Error {
 public:
  using Error::Error;
};

/// Deterministic discrete-event scheduler with a simulated network and node
/// membership. Every dispatched or recorded event gets a unique (tick, seq)
/// and one trace line; identical inputs produce identical traces.
class Kernel {
 public:
  using Action = std::function<void()>;
  using DeliveryHandler = std::function<void(const Transmission&)>;
  using MembershipObserver = std::function<void(const NodeId& node, bool alive)>;

  explicit Kernel(NetworkConfig config = {});

  Tick now() const { return now_; }
  const NetworkConfig& network() const { return config_; }

  /// Enqueue `event` at now + delay. The event's tick and seq are assigned
  /// here. Untraced events still run their action but leave no trace line.
  void schedule(EventRecord event, Tick delay, Action action = {}, bool traced = true);

  /// Dispatch every event of the next non-empty tick (including zero-delay
  /// events scheduled while dispatching) and return the records produced.
  std::vector<EventRecord> step();

  /// Step until the next pending tick would exceed `limit`.
  void runUntil(Tick limit);

  bool idle() const { return queue_.empty(); }
  Tick nextTick() const;

  /// Rejects all further scheduling.
  void finalize() { finalized_ = true; }
  bool finalized() const { return finalized_; }

  /// Append a record for something that happened inside the current
  /// dispatch (nested synchronous work).
  void record(const NodeId& node, std::string kind, std::string payload);

  /// Send `data` over the simulated network. Delivery is FIFO per ordered
  /// pair, delayed by the configured latency, and subject to the seeded drop
  /// draw of the (from, to) channel.
  void transmit(const NodeId& from, const NodeId& to, std::string data);

  void joinNode(const NodeId& node, DeliveryHandler handler);
  void leaveNode(const NodeId& node);
  bool alive(const NodeId& node) const;
  bool known(const NodeId& node) const { return nodes_.count(node) != 0; }
  std::vector<NodeId> aliveNodes() const;

  void addMembershipObserver(MembershipObserver observer);

  const std::vector<std::string>& trace() const { return trace_; }
  std::uint64_t traceHash() const { return traceHash_; }
  /// Optional stream receiving each trace line as it is produced.
  void setTraceSink(std::ostream* sink) { sink_ = sink; }

  std::uint64_t lostTransmissions() const { return lost_; }
  std::uint64_t droppedTransmissions() const { return dropped_; }

 private:
  struct Pending {
    EventRecord record;
    Action action;
    bool traced = true;
    bool delivery = false;
    NodeId deliveryFrom;
  };
  struct NodeState {
    bool alive = false;
    DeliveryHandler handler;
  };

  void emit(const EventRecord& record, std::vector<EventRecord>* sink);
  void recordLost(const NodeId& from, const NodeId& to, const char* reason);
  SplitMix64& channel(const NodeId& from, const NodeId& to);

  NetworkConfig config_;
  Tick now_ = 0;
  std::uint64_t nextSeq_ = 0;
  bool finalized_ = false;
  std::map<std::pair<Tick, std::uint64_t>, Pending> queue_;
  std::map<NodeId, NodeState> nodes_;
  std::map<std::pair<NodeId, NodeId>, SplitMix64> channels_;
  std::vector<MembershipObserver> observers_;
  std::vector<std::string> trace_;
  std::vector<EventRecord>* stepSink_ = nullptr;
  std::ostream* sink_ = nullptr;
  std::uint64_t traceHash_ = kFnvOffset;
  std::uint64_t lost_ = 0;
  std::uint64_t dropped_ = 0;
};

/// Runs `action` every `period` ticks starting at now + phase, as untraced
/// kernel events, until `stop` returns true (checked before each run).
void scheduleRecurring(Kernel& kernel, Tick period, Tick phase, Kernel::Action action,
                       std::function<bool()> stop = {});

/// FNV-1a over a trace file's bytes; equals Kernel::traceHash for the trace
/// the kernel wrote.
std::uint64_t hashTraceText(std::string_view text);

}  // namespace situ
