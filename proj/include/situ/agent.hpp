#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "situ/environment.hpp"

namespace situ {

/// Private repository of an agent. Same template semantics as the
/// environment's state.
class Knowledge {
 public:
  Items read(const Items& templ) const { return matchTemplate(items_, templ); }
  void write(const Items& items);
  void erase(const std::set<std::string>& names);
  std::optional<Value> get(const std::string& name) const;
  bool has(const std::string& name) const { return items_.count(name) != 0; }
  const Items& all() const { return items_; }

 private:
  Items items_;
};

struct Filter {
  std::string name = "identity";
  Value params = Value::object();
};

struct PerceptionRequest {
  std::string id;
  Focus focus;
  Filter filter;
};

/// Recognises a pattern in a representation and extracts knowledge from it.
struct Description {
  std::string name;
  std::function<bool(const Representation&)> matches;
  std::function<Items(const Representation&)> extract;
};

struct PerceptionNotice {
  std::string requestId;
  bool ok = true;
  std::string reason;
  Items percept;  // after filtering
};

using FilterFn = std::function<Items(const Items& percept, const Value& params, const SegmentGraph&)>;

/// Union of the extractions of every matching description.
Items interpret(const Representation& rep, const std::vector<Description>& descriptions);

/// Named filters. "identity", "shortestPath" and "parkLocation" are built in.
class FilterTable {
 public:
  FilterTable();
  void add(const std::string& name, FilterFn fn);
  bool has(const std::string& name) const { return filters_.count(name) != 0; }
  Items apply(const Items& percept, const Filter& filter, const SegmentGraph& graph) const;

 private:
  std::map<std::string, FilterFn> filters_;
};

Items filterPercept(const Items& percept, const Filter& filter, const FilterTable& table,
                    const SegmentGraph& graph);

enum class CongestionStatus { freeFlow, moderate, congested, jammed };
const char* toString(CongestionStatus status);
std::optional<CongestionStatus> congestionFromString(const std::string& text);

/// Upper bounds (exclusive) for freeFlow, moderate and congested; anything
/// at or above the last one is jammed.
struct CongestionThresholds {
  double moderate = 2.0;
  double congested = 4.0;
  double jammed = 6.0;
};
CongestionStatus classifyCongestion(double load, const CongestionThresholds& thresholds);

/// Matches {"type":"trafficObservation", path, density, intensity,
/// averageSpeed} and yields a trafficState item classified by density.
Description congestionLevelDescription(CongestionThresholds thresholds);
/// Matches {"type":"paths","paths":[...]} and yields a "paths" item.
Description pathsDescription();
/// Matches {"type":"parkLocations","locations":[...]}.
Description parkLocationsDescription();

struct Conversation {
  std::int64_t id = 0;
  std::string protocol;
  std::string key;
  std::vector<MessageData> history;
};

class ConversationError : public Error {
 public:
  using Error::Error;
};

class ConversationStore {
 public:
  std::int64_t add(const std::string& protocol, const std::string& key, const MessageData& first);
  const Conversation& read(std::int64_t id) const;
  void update(std::int64_t id, const MessageData& data);
  void terminate(std::int64_t id);
  std::optional<std::int64_t> find(const std::string& key) const;
  std::size_t size() const { return conversations_.size(); }
  const std::map<std::int64_t, Conversation>& all() const { return conversations_; }

 private:
  std::map<std::int64_t, Conversation> conversations_;
  std::map<std::string, std::int64_t> byKey_;
  std::int64_t nextId_ = 1;
};

class SituatedAgent;

/// Protocol-specific part of the communication pipeline.
class ProtocolHandler {
 public:
  virtual ~ProtocolHandler() = default;
  virtual std::string protocol() const = 0;
  /// Conversation key of a message, sent or received.
  virtual std::string conversationKey(const SituatedAgent& agent, const MessageData& data) const = 0;
  virtual void incoming(SituatedAgent& agent, const Conversation& conversation, const MessageData& data) = 0;
  /// Next message this protocol wants to send, if any.
  virtual std::optional<MessageData> outgoing(SituatedAgent& agent) = 0;
  /// Conversations that reached a final state.
  virtual std::vector<std::int64_t> finished(SituatedAgent& agent) { (void)agent; return {}; }
};

/// Protocol handler assembled from callbacks, with an outgoing queue.
class QueuedProtocol : public ProtocolHandler {
 public:
  using KeyFn = std::function<std::string(const SituatedAgent&, const MessageData&)>;
  using IncomingFn = std::function<void(SituatedAgent&, const Conversation&, const MessageData&)>;
  using FinishedFn = std::function<std::vector<std::int64_t>(SituatedAgent&)>;

  QueuedProtocol(std::string protocol, KeyFn key, IncomingFn incoming, FinishedFn finished = {})
      : protocol_(std::move(protocol)), key_(std::move(key)), incoming_(std::move(incoming)),
        finished_(std::move(finished)) {}

  std::string protocol() const override { return protocol_; }
  std::string conversationKey(const SituatedAgent& agent, const MessageData& data) const override {
    return key_(agent, data);
  }
  void incoming(SituatedAgent& agent, const Conversation& c, const MessageData& data) override {
    incoming_(agent, c, data);
  }
  std::optional<MessageData> outgoing(SituatedAgent&) override {
    if (queue_.empty()) return std::nullopt;
    MessageData d = std::move(queue_.front());
    queue_.pop_front();
    return d;
  }
  std::vector<std::int64_t> finished(SituatedAgent& agent) override {
    if (!queue_.empty() || !finished_) return {};
    return finished_(agent);
  }

  void post(MessageData data) { queue_.push_back(std::move(data)); }
  bool idle() const { return queue_.empty(); }

 private:
  std::string protocol_;
  KeyFn key_;
  IncomingFn incoming_;
  FinishedFn finished_;
  std::deque<MessageData> queue_;
};

/// Agent shell: knowledge, selective perception and protocol-based
/// communication, attached to the virtual environment of its node.
class SituatedAgent {
 public:
  SituatedAgent(std::string id, std::string kind, VirtualEnvironment& ve);
  virtual ~SituatedAgent() = default;
  SituatedAgent(const SituatedAgent&) = delete;
  SituatedAgent& operator=(const SituatedAgent&) = delete;

  const std::string& id() const { return id_; }
  const std::string& kind() const { return kind_; }
  VirtualEnvironment& env() { return *ve_; }
  const VirtualEnvironment& env() const { return *ve_; }
  Knowledge& knowledge() { return knowledge_; }
  const Knowledge& knowledge() const { return knowledge_; }

  // -- perception ----------------------------------------------------------
  void addDescription(Description d) { descriptions_.push_back(std::move(d)); }
  FilterTable& filters() { return filters_; }
  PerceptionNotice perceive(const PerceptionRequest& request);
  const std::vector<PerceptionNotice>& notices() const { return notices_; }
  void clearNotices() { notices_.clear(); }

  // -- communication -------------------------------------------------------
  void addProtocol(std::shared_ptr<ProtocolHandler> handler);
  void receive(const Message& message) { inbox_.push_back(message); }
  /// One pass of the communicating behaviour: handle an incoming message,
  /// else send one outgoing message, else terminate finished
  /// conversations. Returns false when there was nothing to do.
  bool communicateStep();
  /// Runs communicateStep until idle or `budget` passes are used.
  int communicate(int budget);
  std::int64_t nextMessageId();
  ConversationStore& conversations() { return conversations_; }
  std::size_t inboxSize() const { return inbox_.size(); }

  void act(const Action& action) { ve_->act(action); }

 protected:
  void note(const std::string& kind, const Value& payload);

 private:
  ProtocolHandler* handlerFor(const std::string& protocol);
  void flushOutbox();

  std::string id_;
  std::string kind_;
  VirtualEnvironment* ve_;
  Knowledge knowledge_;
  std::vector<Description> descriptions_;
  FilterTable filters_;
  std::vector<PerceptionNotice> notices_;
  std::deque<Message> inbox_;
  std::deque<Message> outbox_;
  std::vector<std::shared_ptr<ProtocolHandler>> handlers_;
  ConversationStore conversations_;
  std::int64_t messageCounter_ = 0;
};

}  // namespace situ
