#include "situ/kernel.hpp"

#include <memory>
#include <ostream>

namespace situ {

Items matchTemplate(const Items& repository, const Items& templ) {
  Items out;
  for (const auto& [name, constraint] : templ) {
    auto it = repository.find(name);
    if (it == repository.end()) continue;
    if (!constraint.is_null() && constraint != it->second) continue;
    out.emplace(name, it->second);
  }
  return out;
}

std::string canonicalText(const Items& items) {
  Value obj = Value::object();
  for (const auto& [k, v] : items) obj[k] = v;
  return obj.dump();
}

std::string formatRecord(const EventRecord& r) {
  std::string line = std::to_string(r.tick);
  line += ' ';
  line += std::to_string(r.seq);
  line += ' ';
  line += r.node.empty() ? std::string("-") : r.node;
  line += ' ';
  line += r.kind;
  line += ' ';
  line += r.payload.empty() ? std::string("{}") : r.payload;
  return line;
}

std::uint64_t hashTraceText(std::string_view text) { return fnv1a64(text); }

Kernel::Kernel(NetworkConfig config) : config_(config) {
  if (config_.dropProbability < 0.0 || config_.dropProbability > 1.0) {
    throw KernelError("dropProbability must lie in [0, 1]");
  }
}

Tick Kernel::nextTick() const {
  if (queue_.empty()) return now_;
  return queue_.begin()->first.first;
}

void Kernel::schedule(EventRecord event, Tick delay, Action action, bool traced) {
  if (finalized_) throw KernelError("schedule on a finalized kernel");
  event.tick = now_ + delay;
  event.seq = nextSeq_++;
  Pending p{std::move(event), std::move(action), traced, false, {}};
  auto key = std::make_pair(p.record.tick, p.record.seq);
  queue_.emplace(key, std::move(p));
}

void Kernel::emit(const EventRecord& record, std::vector<EventRecord>* sink) {
  std::string line = formatRecord(record);
  traceHash_ = fnv1a64(line, traceHash_);
  traceHash_ = fnv1a64("\n", traceHash_);
  if (sink_) *sink_ << line << '\n';
  trace_.push_back(std::move(line));
  if (sink) sink->push_back(record);
}

void Kernel::record(const NodeId& node, std::string kind, std::string payload) {
  EventRecord r{now_, nextSeq_++, node, std::move(kind), std::move(payload)};
  emit(r, stepSink_);
}

std::vector<EventRecord> Kernel::step() {
  std::vector<EventRecord> out;
  if (queue_.empty()) return out;
  now_ = queue_.begin()->first.first;
  stepSink_ = &out;
  while (!queue_.empty() && queue_.begin()->first.first == now_) {
    auto node = queue_.extract(queue_.begin());
    Pending& p = node.mapped();
    auto nit = nodes_.find(p.record.node);
    if (nit != nodes_.end() && !nit->second.alive) continue;
    if (p.traced) emit(p.record, &out);
    if (p.action) p.action();
  }
  stepSink_ = nullptr;
  return out;
}

void Kernel::runUntil(Tick limit) {
  while (!queue_.empty() && queue_.begin()->first.first <= limit) step();
}

SplitMix64& Kernel::channel(const NodeId& from, const NodeId& to) {
  auto key = std::make_pair(from, to);
  auto it = channels_.find(key);
  if (it == channels_.end()) {
    std::string name = from;
    name += '\x1f';
    name += to;
    it = channels_.emplace(key, SplitMix64::stream(config_.seed, name)).first;
  }
  return it->second;
}

void Kernel::recordLost(const NodeId& from, const NodeId& to, const char* reason) {
  ++lost_;
  Value payload = {{"from", from}, {"reason", reason}, {"to", to}};
  record(kNetNode, "lost", payload.dump());
}

void Kernel::transmit(const NodeId& from, const NodeId& to, std::string data) {
  if (!alive(from)) return;
  auto it = nodes_.find(to);
  if (it == nodes_.end()) {
    recordLost(from, to, "unknown-node");
    return;
  }
  if (!it->second.alive) {
    recordLost(from, to, "dead-node");
    return;
  }
  double draw = channel(from, to).nextUnit();
  if (draw < config_.dropProbability) {
    ++dropped_;
    Value payload = {{"from", from}, {"to", to}};
    record(kNetNode, "drop", payload.dump());
    return;
  }
  Value payload = {{"data", data}, {"from", from}};
  EventRecord ev{0, 0, to, "deliver", payload.dump()};
  if (finalized_) throw KernelError("transmit on a finalized kernel");
  ev.tick = now_ + config_.latencyTicks;
  ev.seq = nextSeq_++;
  Transmission t{from, to, std::move(data)};
  Pending p{ev, {}, true, true, from};
  p.action = [this, t = std::move(t)]() {
    auto nit = nodes_.find(t.to);
    if (nit != nodes_.end() && nit->second.alive && nit->second.handler) nit->second.handler(t);
  };
  queue_.emplace(std::make_pair(ev.tick, ev.seq), std::move(p));
}

void Kernel::joinNode(const NodeId& node, DeliveryHandler handler) {
  auto& state = nodes_[node];
  if (state.alive) throw KernelError("node already joined: " + node);
  state.alive = true;
  state.handler = std::move(handler);
  Value payload = {{"alive", true}, {"node", node}};
  record(kKernelNode, "membership", payload.dump());
  auto observers = observers_;
  for (auto& obs : observers) obs(node, true);
}

void Kernel::leaveNode(const NodeId& node) {
  auto it = nodes_.find(node);
  if (it == nodes_.end() || !it->second.alive) throw KernelError("node not alive: " + node);
  it->second.alive = false;
  it->second.handler = nullptr;
  Value payload = {{"alive", false}, {"node", node}};
  record(kKernelNode, "membership", payload.dump());
  for (auto q = queue_.begin(); q != queue_.end();) {
    if (q->second.record.node == node) {
      if (q->second.delivery) recordLost(q->second.deliveryFrom, node, "departed");
      q = queue_.erase(q);
    } else {
      ++q;
    }
  }
  auto observers = observers_;
  for (auto& obs : observers) obs(node, false);
}

bool Kernel::alive(const NodeId& node) const {
  auto it = nodes_.find(node);
  return it != nodes_.end() && it->second.alive;
}

std::vector<NodeId> Kernel::aliveNodes() const {
  std::vector<NodeId> out;
  for (const auto& [id, st] : nodes_) {
    if (st.alive) out.push_back(id);
  }
  return out;
}

void Kernel::addMembershipObserver(MembershipObserver observer) {
  observers_.push_back(std::move(observer));
}

void scheduleRecurring(Kernel& kernel, Tick period, Tick phase, Kernel::Action action,
                       std::function<bool()> stop) {
  if (period == 0) throw KernelError("recurring event needs a positive period");
  struct Loop {
    Kernel* kernel;
    Tick period;
    Kernel::Action action;
    std::function<bool()> stop;
    void arm(const std::shared_ptr<Loop>& self, Tick delay) {
      if (kernel->finalized()) return;
      kernel->schedule(EventRecord{0, 0, kKernelNode, "tick", ""}, delay, [self] {
        if (self->stop && self->stop()) return;
        self->action();
        self->arm(self, self->period);
      }, false);
    }
  };
  auto loop = std::make_shared<Loop>(Loop{&kernel, period, std::move(action), std::move(stop)});
  loop->arm(loop, phase);
}

}  // namespace situ
