#include "situ/environment.hpp"

#include <algorithm>

namespace situ {

namespace {

constexpr std::pair<SyncKind, const char*> kSyncNames[] = {
    {SyncKind::fieldSpread, "fieldSpread"},     {SyncKind::fieldRemove, "fieldRemove"},
    {SyncKind::claimBroadcast, "claimBroadcast"}, {SyncKind::claimRelease, "claimRelease"},
    {SyncKind::membership, "membership"},       {SyncKind::resourceMirror, "resourceMirror"},
};

Value itemsToValue(const Items& items) {
  Value v = Value::object();
  for (const auto& [k, x] : items) v[k] = x;
  return v;
}

}  // namespace

const char* toString(SyncKind kind) {
  for (const auto& [k, name] : kSyncNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<SyncKind> syncKindFromString(const std::string& text) {
  for (const auto& [k, name] : kSyncNames) {
    if (text == name) return k;
  }
  return std::nullopt;
}

std::string positionKey(const std::string& agent) { return "position/" + agent; }

VirtualEnvironment::VirtualEnvironment(NodeId node, Kernel& kernel, const SegmentGraph& graph,
                                       const ContentLanguage& language)
    : node_(std::move(node)), kernel_(kernel), graph_(graph), language_(language) {
  registerSyncHandler(SyncKind::resourceMirror,
                      [](VirtualEnvironment& ve, const SynchronizationUpdate& u) {
                        ve.writeState(u.payload);
                      });
}

void VirtualEnvironment::note(const std::string& kind, const Value& payload) {
  kernel_.record(node_, kind, payload.dump());
}

// -- state -------------------------------------------------------------------

Items VirtualEnvironment::readState(const Items& templ) const { return matchTemplate(state_, templ); }

Items VirtualEnvironment::readPrefix(const std::string& prefix) const {
  Items out;
  for (auto it = state_.lower_bound(prefix); it != state_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.insert(*it);
  }
  return out;
}

void VirtualEnvironment::writeState(const Items& items) {
  for (const auto& [name, value] : items) {
    if (name.empty()) throw Error("state item with empty name");
    state_[name] = value;
  }
}

void VirtualEnvironment::eraseState(const std::set<std::string>& names) {
  for (const auto& n : names) state_.erase(n);
}

// -- perception --------------------------------------------------------------

void VirtualEnvironment::registerVirtualFocus(const std::string& name, FocusGenerator generator) {
  perceptionTypes_[name] = PerceptionType{true, std::move(generator), {}, {}};
}

void VirtualEnvironment::registerExternalFocus(const std::string& name,
                                               ObservationBuilder observation,
                                               ObservedInterpreter interpret) {
  perceptionTypes_[name] = PerceptionType{false, {}, std::move(observation), std::move(interpret)};
}

bool VirtualEnvironment::isVirtualFocus(const std::string& name) const {
  auto it = perceptionTypes_.find(name);
  if (it == perceptionTypes_.end()) throw UnknownFocus("unknown focus '" + name + "'");
  return it->second.isVirtual;
}

Representation VirtualEnvironment::sense(const Sense& request) const {
  auto it = perceptionTypes_.find(request.focus.name);
  if (it == perceptionTypes_.end()) throw UnknownFocus("unknown focus '" + request.focus.name + "'");
  const PerceptionType& type = it->second;
  if (type.isVirtual) return type.generate(*this, request);
  if (!external_) throw Error("no external environment attached to " + node_);
  Value observed = external_->observe(type.observation(request));
  return type.interpret(request, observed);
}

// -- actions -----------------------------------------------------------------

void VirtualEnvironment::registerVirtualAction(const std::string& name, VirtualEffect effect) {
  actionTypes_[name] = ActionType{true, std::move(effect), {}};
}

void VirtualEnvironment::registerExternalAction(const std::string& name, OperationBuilder builder) {
  actionTypes_[name] = ActionType{false, {}, std::move(builder)};
}

bool VirtualEnvironment::isVirtualAction(const std::string& name) const {
  auto it = actionTypes_.find(name);
  if (it == actionTypes_.end()) throw ActionRejected("unknown action '" + name + "'");
  return it->second.isVirtual;
}

bool VirtualEnvironment::knowsAction(const std::string& name) const {
  return actionTypes_.count(name) != 0;
}

void VirtualEnvironment::act(const Action& action) {
  auto it = actionTypes_.find(action.name);
  if (it == actionTypes_.end()) throw ActionRejected("unknown action '" + action.name + "'");
  const ActionType& type = it->second;
  if (type.isVirtual) {
    Items update = type.effect(*this, action);
    writeState(update);
    note("act", {{"action", action.name}, {"agent", action.agentId}, {"params", action.params}});
    return;
  }
  if (!external_) throw ActionRejected("no external environment attached to " + node_);
  Value op = type.operation(*this, action);
  note("operate", {{"agent", action.agentId}, {"operation", op}});
  external_->operate(op);
}

// -- communication -----------------------------------------------------------

void VirtualEnvironment::addAddress(const std::string& agent, const NodeId& node,
                                    const std::string& kind) {
  addresses_[agent] = Address{node, kind};
}

std::optional<NodeId> VirtualEnvironment::addressOf(const std::string& agent) const {
  auto it = addresses_.find(agent);
  if (it == addresses_.end()) return std::nullopt;
  return it->second.node;
}

void VirtualEnvironment::registerAudience(const std::string& protocol, const std::string& kind) {
  audiences_[protocol] = kind;
}

void VirtualEnvironment::host(const std::string& agent, InboxSink sink) {
  hosted_[agent] = std::move(sink);
}

void VirtualEnvironment::unhost(const std::string& agent) { hosted_.erase(agent); }

std::map<NodeId, std::vector<std::string>> VirtualEnvironment::resolveReceivers(
    const Message& message) const {
  std::map<NodeId, std::vector<std::string>> out;
  ReceiverSpec spec = parseReceiver(message.receiver);
  if (spec.kind == ReceiverSpec::Kind::agent) {
    auto it = addresses_.find(spec.agent);
    if (it != addresses_.end()) out[it->second.node].push_back(spec.agent);
    return out;
  }
  auto audience = audiences_.find(message.protocol);
  std::optional<NodeId> origin;
  if (spec.kind == ReceiverSpec::Kind::scope) {
    auto pos = state_.find(positionKey(message.sender));
    if (pos == state_.end() || !pos->second.is_string()) return out;
    origin = pos->second.get<std::string>();
    if (!graph_.hasNode(*origin)) return out;
  }
  for (const auto& [agent, addr] : addresses_) {
    if (agent == message.sender) continue;
    if (audience != audiences_.end() && addr.kind != audience->second) continue;
    if (origin) {
      auto pos = state_.find(positionKey(agent));
      if (pos == state_.end() || !pos->second.is_string()) continue;
      const auto where = pos->second.get<std::string>();
      if (!graph_.hasNode(where)) continue;
      if (distanceMeters(graph_, *origin, where) > spec.meters) continue;
    }
    out[addr.node].push_back(agent);
  }
  return out;
}

void VirtualEnvironment::deliverLocal(const Message& message, const std::string& agent) {
  auto sink = hosted_.find(agent);
  if (sink == hosted_.end()) {
    note("drop", {{"id", message.id}, {"reason", "not-hosted"}, {"to", agent}});
    return;
  }
  if (!delivered_.emplace(message.id, agent).second) {
    note("duplicate", {{"id", message.id}, {"to", agent}});
    return;
  }
  note("inbox", {{"agent", agent}, {"id", message.id}, {"performative", message.performative},
                 {"protocol", message.protocol}});
  sink->second(message);
}

void VirtualEnvironment::sendMessage(const Message& message) {
  language_.validate(message);
  auto receivers = resolveReceivers(message);
  note("send", {{"message", messageToValue(message)}});
  if (receivers.empty()) {
    note("undeliverable", {{"id", message.id}, {"receiver", message.receiver}});
    return;
  }
  for (const auto& [node, agents] : receivers) {
    if (node == node_) {
      for (const auto& a : agents) deliverLocal(message, a);
      continue;
    }
    Value envelope = {{"message", messageToValue(message)}, {"t", "msg"}, {"to", agents}};
    kernel_.transmit(node_, node, envelope.dump());
  }
}

void VirtualEnvironment::deliverTransmission(const Transmission& t) {
  Value envelope = Value::parse(t.data, nullptr, false);
  if (envelope.is_discarded() || !envelope.is_object() || !envelope.contains("t")) {
    note("error", {{"from", t.from}, {"reason", "undecodable transmission"}});
    return;
  }
  const std::string tag = envelope["t"].is_string() ? envelope["t"].get<std::string>() : "";
  if (tag == "sync") {
    auto kind = envelope.contains("kind") && envelope["kind"].is_string()
                    ? syncKindFromString(envelope["kind"].get<std::string>())
                    : std::nullopt;
    if (!kind || !envelope.contains("payload") || !envelope["payload"].is_object()) {
      note("error", {{"from", t.from}, {"reason", "unknown update kind"}});
      return;
    }
    SynchronizationUpdate u{*kind, envelope.value("origin", t.from), {}};
    for (auto& [k, v] : envelope["payload"].items()) u.payload[k] = v;
    applySyncUpdate(u);
    return;
  }
  if (tag != "msg") {
    note("error", {{"from", t.from}, {"reason", "unknown transmission tag"}});
    return;
  }
  Message message;
  try {
    message = messageFromValue(envelope.value("message", Value()));
    language_.validate(message);
  } catch (const MalformedMessage& e) {
    note("error", {{"from", t.from}, {"reason", e.what()}});
    return;
  }
  if (!envelope.contains("to") || !envelope["to"].is_array()) {
    note("error", {{"from", t.from}, {"reason", "missing addressees"}});
    return;
  }
  for (const auto& a : envelope["to"]) {
    if (a.is_string()) deliverLocal(message, a.get<std::string>());
  }
}

// -- synchronization ---------------------------------------------------------

void VirtualEnvironment::registerSyncItem(const std::string& name, SyncItem item) {
  syncItems_.emplace_back(name, std::move(item));
}

void VirtualEnvironment::registerSyncHandler(SyncKind kind, SyncHandler handler) {
  syncHandlers_[kind].push_back(std::move(handler));
}

void VirtualEnvironment::synchronizeLocal() {
  for (auto& [name, item] : syncItems_) item(*this);
}

void VirtualEnvironment::emitSync(const SynchronizationUpdate& update,
                                  const std::vector<NodeId>& targets) {
  Value envelope = {{"kind", toString(update.kind)},
                    {"origin", update.origin.empty() ? node_ : update.origin},
                    {"payload", itemsToValue(update.payload)},
                    {"t", "sync"}};
  std::string data = envelope.dump();
  if (targets.empty()) {
    for (const auto& n : kernel_.aliveNodes()) {
      if (n != node_) kernel_.transmit(node_, n, data);
    }
    return;
  }
  for (const auto& n : targets) {
    if (n != node_) kernel_.transmit(node_, n, data);
  }
}

void VirtualEnvironment::applySyncUpdate(const SynchronizationUpdate& update) {
  auto it = syncHandlers_.find(update.kind);
  if (it == syncHandlers_.end() || it->second.empty()) {
    note("error", {{"kind", toString(update.kind)}, {"reason", "no handler for update kind"}});
    return;
  }
  auto handlers = it->second;
  for (auto& h : handlers) h(*this, update);
}

// -- platform ----------------------------------------------------------------

Platform::Platform(NetworkConfig network, const SegmentGraph& graph, const ContentLanguage& language)
    : kernel_(network), graph_(graph), language_(language) {
  kernel_.addMembershipObserver([this](const NodeId& node, bool alive) {
    SynchronizationUpdate u{SyncKind::membership, node, {{"alive", alive}, {"node", node}}};
    for (const auto& n : kernel_.aliveNodes()) {
      if (n == node) continue;
      auto* ve = environment(n);
      if (ve) ve->applySyncUpdate(u);
    }
  });
}

void Platform::addNodeSetup(NodeSetup setup) {
  for (const auto& n : kernel_.aliveNodes()) {
    if (auto* ve = environment(n)) setup(*ve);
  }
  setups_.push_back(std::move(setup));
}

VirtualEnvironment& Platform::joinNode(const NodeId& node) {
  if (kernel_.alive(node)) throw KernelError("node already joined: " + node);
  auto ve = std::make_unique<VirtualEnvironment>(node, kernel_, graph_, language_);
  // No membership handler by default; scenario setups install them.
  ve->registerSyncHandler(SyncKind::membership, [](VirtualEnvironment&, const SynchronizationUpdate&) {});
  for (const auto& [agent, at, kind] : directory_) ve->addAddress(agent, at, kind);
  for (const auto& [protocol, kind] : audiences_) ve->registerAudience(protocol, kind);
  for (auto& setup : setups_) setup(*ve);
  VirtualEnvironment* raw = ve.get();
  auto& slot = environments_[node];
  if (slot) retired_.push_back(std::move(slot));
  slot = std::move(ve);
  kernel_.joinNode(node, [raw](const Transmission& t) { raw->deliverTransmission(t); });
  return *raw;
}

void Platform::leaveNode(const NodeId& node) { kernel_.leaveNode(node); }

VirtualEnvironment* Platform::environment(const NodeId& node) {
  auto it = environments_.find(node);
  if (it == environments_.end() || !kernel_.alive(node)) return nullptr;
  return it->second.get();
}

void Platform::registerAddress(const std::string& agent, const NodeId& node,
                               const std::string& kind) {
  directory_.emplace_back(agent, node, kind);
  for (auto& [n, ve] : environments_) ve->addAddress(agent, node, kind);
}

void Platform::registerAudience(const std::string& protocol, const std::string& kind) {
  audiences_[protocol] = kind;
  for (auto& [n, ve] : environments_) ve->registerAudience(protocol, kind);
}

}  // namespace situ
