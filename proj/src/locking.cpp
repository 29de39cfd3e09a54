#include "situ/locking.hpp"

#include <algorithm>

namespace situ {

bool precedes(const Claim& a, const Claim& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.projectionId != b.projectionId) return a.projectionId < b.projectionId;
  return a.claimTick < b.claimTick;
}

bool conflicts(const Claim& a, const Claim& b) {
  auto i = a.segments.begin();
  auto j = b.segments.begin();
  while (i != a.segments.end() && j != b.segments.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

namespace {

std::vector<const Claim*> inPrecedenceOrder(const std::map<std::int64_t, Claim>& claims) {
  std::vector<const Claim*> order;
  for (const auto& [_, c] : claims) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const Claim* a, const Claim* b) { return precedes(*a, *b); });
  return order;
}

Value edgesToValue(const std::set<EdgeId>& edges) {
  Value v = Value::array();
  for (auto e : edges) v.push_back(e);
  return v;
}

std::set<EdgeId> edgesFromValue(const Value& v) {
  std::set<EdgeId> out;
  for (const auto& e : v) out.insert(e.get<EdgeId>());
  return out;
}

}  // namespace

std::set<std::int64_t> grantable(const ClaimTable& table) {
  std::set<std::int64_t> out;
  std::vector<const Claim*> held;
  for (const auto& [_, c] : table.granted) held.push_back(&c);
  for (const Claim* c : inPrecedenceOrder(table.outstanding)) {
    bool blocked = std::any_of(held.begin(), held.end(), [&](const Claim* g) { return conflicts(*c, *g); });
    if (blocked) continue;
    out.insert(c->projectionId);
    held.push_back(c);
  }
  return out;
}

std::set<std::int64_t> resolve(ClaimTable& table) {
  auto ids = grantable(table);
  for (auto id : ids) {
    auto node = table.outstanding.extract(id);
    table.granted.insert(std::move(node));
  }
  return ids;
}

Value claimToValue(const Claim& c) {
  return {{"claimTick", c.claimTick}, {"owner", c.owner},         {"priority", c.priority},
          {"projectionId", c.projectionId}, {"requester", c.requester},
          {"segments", edgesToValue(c.segments)}};
}

Claim claimFromValue(const Value& v) {
  Claim c;
  c.projectionId = v.at("projectionId").get<std::int64_t>();
  c.priority = v.at("priority").get<int>();
  c.segments = edgesFromValue(v.at("segments"));
  c.requester = v.at("requester").get<std::string>();
  c.claimTick = v.at("claimTick").get<Tick>();
  c.owner = v.at("owner").get<std::string>();
  return c;
}

std::string projectionKey(const std::string& agent) { return "projection/" + agent; }

// -- LockService -------------------------------------------------------------

LockService::LockService(VirtualEnvironment& ve) : ve_(ve) {}

void LockService::send(SyncKind kind, Items payload, const std::vector<NodeId>& targets) {
  if (targets.empty()) return;
  ve_.emitSync({kind, ve_.node(), std::move(payload)}, targets);
}

void LockService::sendRequest(Own& own, const NodeId& to) {
  std::uint64_t round = ++own.round;
  own.pending[to] = round;
  send(SyncKind::claimBroadcast,
       {{"claim", claimToValue(own.claim)}, {"op", "request"}, {"round", round}}, {to});
}

void LockService::submit(const Claim& claim) {
  if (claim.segments.empty()) throw Error("claim without segments");
  auto id = claim.projectionId;
  if (table_.outstanding.count(id) || table_.granted.count(id)) {
    throw Error("duplicate projection id " + std::to_string(id));
  }
  Claim c = claim;
  c.requester = ve_.node();
  table_.outstanding[id] = c;
  Own& own = own_[id];
  own.claim = c;
  for (const auto& n : ve_.kernel().aliveNodes()) {
    if (n != ve_.node()) sendRequest(own, n);
  }
  tryGrant();
}

void LockService::clear(std::int64_t id, const std::set<EdgeId>& segments) {
  auto it = own_.find(id);
  if (it == own_.end() || !it->second.granted) {
    throw Error("projection " + std::to_string(id) + " is not locked");
  }
  if (segments.empty()) return;
  Claim& c = it->second.claim;
  for (auto e : segments) c.segments.erase(e);
  Value remaining = edgesToValue(c.segments);
  if (c.segments.empty()) {
    own_.erase(it);
    table_.granted.erase(id);
  } else {
    table_.granted[id] = c;
  }
  std::vector<NodeId> others;
  for (const auto& n : ve_.kernel().aliveNodes()) {
    if (n != ve_.node()) others.push_back(n);
  }
  // Releases go out before any deferred reply so receivers never see a
  // reply ahead of the release it depends on.
  send(SyncKind::claimRelease, {{"projectionId", id}, {"segments", remaining}}, others);
  reconsiderDeferred();
  tryGrant();
}

bool LockService::isGranted(std::int64_t id) const {
  auto it = own_.find(id);
  return it != own_.end() && it->second.granted;
}

bool LockService::mustDefer(const Claim& remote) const {
  for (const auto& [_, own] : own_) {
    if (!conflicts(own.claim, remote)) continue;
    if (own.granted || precedes(own.claim, remote)) return true;
  }
  return false;
}

void LockService::reply(const Claim& remote, std::uint64_t round) {
  send(SyncKind::claimBroadcast,
       {{"from", ve_.node()}, {"op", "reply"}, {"projectionId", remote.projectionId}, {"round", round}},
       {remote.requester});
  for (auto& [_, own] : own_) {
    if (!own.granted && conflicts(own.claim, remote) && precedes(remote, own.claim)) {
      sendRequest(own, remote.requester);
    }
  }
}

void LockService::consider(const Claim& remote, std::uint64_t round) {
  if (mustDefer(remote)) {
    deferred_[remote.projectionId] = Deferred{remote, round};
    return;
  }
  deferred_.erase(remote.projectionId);
  reply(remote, round);
}

void LockService::reconsiderDeferred() {
  std::vector<Deferred> ready;
  for (const auto& [_, d] : deferred_) {
    if (!mustDefer(d.claim)) ready.push_back(d);
  }
  std::sort(ready.begin(), ready.end(),
            [](const Deferred& a, const Deferred& b) { return precedes(a.claim, b.claim); });
  for (const auto& d : ready) {
    deferred_.erase(d.claim.projectionId);
    reply(d.claim, d.round);
  }
}

void LockService::tryGrant() {
  bool changed = true;
  while (changed) {
    changed = false;
    auto allowed = grantable(table_);
    std::vector<Own*> order;
    for (auto& [id, own] : own_) {
      if (!own.granted && own.pending.empty() && allowed.count(id)) order.push_back(&own);
    }
    std::sort(order.begin(), order.end(),
              [](const Own* a, const Own* b) { return precedes(a->claim, b->claim); });
    for (Own* own : order) {
      // Re-check: an earlier grant in this loop may now block this one.
      bool blocked = false;
      for (const auto& [_, g] : table_.granted) {
        if (conflicts(g, own->claim)) blocked = true;
      }
      if (blocked) continue;
      own->granted = true;
      auto id = own->claim.projectionId;
      table_.outstanding.erase(id);
      table_.granted[id] = own->claim;
      std::vector<NodeId> others;
      for (const auto& n : ve_.kernel().aliveNodes()) {
        if (n != ve_.node()) others.push_back(n);
      }
      send(SyncKind::claimBroadcast, {{"op", "granted"}, {"projectionId", id}}, others);
      Claim granted = own->claim;
      for (auto& cb : grantCallbacks_) cb(granted);
      changed = true;
      break;
    }
  }
}

void LockService::handleUpdate(const SynchronizationUpdate& u) {
  if (u.kind == SyncKind::claimRelease) {
    auto id = u.payload.at("projectionId").get<std::int64_t>();
    auto remaining = edgesFromValue(u.payload.at("segments"));
    if (remaining.empty()) {
      table_.granted.erase(id);
      table_.outstanding.erase(id);
    } else if (auto it = table_.granted.find(id); it != table_.granted.end()) {
      it->second.segments = remaining;
    }
    reconsiderDeferred();
    tryGrant();
    return;
  }
  const std::string op = u.payload.at("op").get<std::string>();
  if (op == "request") {
    Claim c = claimFromValue(u.payload.at("claim"));
    if (!table_.granted.count(c.projectionId)) table_.outstanding[c.projectionId] = c;
    consider(c, u.payload.at("round").get<std::uint64_t>());
    tryGrant();
  } else if (op == "reply") {
    auto id = u.payload.at("projectionId").get<std::int64_t>();
    auto from = u.payload.at("from").get<std::string>();
    auto it = own_.find(id);
    if (it == own_.end() || it->second.granted) return;
    auto p = it->second.pending.find(from);
    if (p == it->second.pending.end() || p->second != u.payload.at("round").get<std::uint64_t>()) return;
    it->second.pending.erase(p);
    tryGrant();
  } else if (op == "granted") {
    auto id = u.payload.at("projectionId").get<std::int64_t>();
    auto it = table_.outstanding.find(id);
    if (it == table_.outstanding.end()) return;
    table_.granted[id] = it->second;
    table_.outstanding.erase(it);
    deferred_.erase(id);
  }
}

void LockService::handleMembership(const NodeId& node, bool alive) {
  if (node == ve_.node()) return;
  if (alive) {
    for (auto& [_, own] : own_) {
      if (!own.granted) sendRequest(own, node);
    }
    return;
  }
  for (auto* claims : {&table_.outstanding, &table_.granted}) {
    for (auto it = claims->begin(); it != claims->end();) {
      if (it->second.requester == node) it = claims->erase(it); else ++it;
    }
  }
  for (auto it = deferred_.begin(); it != deferred_.end();) {
    if (it->second.claim.requester == node) it = deferred_.erase(it); else ++it;
  }
  for (auto& [_, own] : own_) own.pending.erase(node);
  reconsiderDeferred();
  tryGrant();
}

// -- environment wiring ------------------------------------------------------

namespace {

Value projectionToValue(const PathProjection& p, const std::string& owner) {
  Value projection = Value::array();
  for (auto e : p.projection) projection.push_back(e);
  return {{"hull", edgesToValue(p.hull.segments)}, {"id", p.id},
          {"margin", p.hull.marginMeters},          {"owner", owner},
          {"priority", p.priority},                 {"projection", projection},
          {"status", toString(p.status)}};
}

}  // namespace

std::shared_ptr<LockService> installLocking(VirtualEnvironment& ve) {
  auto service = std::make_shared<LockService>(ve);
  LockService* raw = service.get();
  for (auto kind : {SyncKind::claimBroadcast, SyncKind::claimRelease}) {
    ve.registerSyncHandler(kind, [service](VirtualEnvironment&, const SynchronizationUpdate& u) {
      service->handleUpdate(u);
    });
  }
  ve.registerSyncHandler(SyncKind::membership, [service](VirtualEnvironment&, const SynchronizationUpdate& u) {
    service->handleMembership(u.payload.at("node").get<std::string>(), u.payload.at("alive").get<bool>());
  });
  VirtualEnvironment* env = &ve;
  raw->onGrant([env](const Claim& c) {
    auto key = projectionKey(c.owner);
    auto cur = env->readState({{key, Value()}});
    if (cur.empty()) return;
    Value v = cur.begin()->second;
    v["status"] = toString(ProjectionStatus::locked);
    env->writeState({{key, v}});
  });

  ve.registerVirtualAction("project", [raw](VirtualEnvironment& env, const Action& a) -> Items {
    auto key = projectionKey(a.agentId);
    if (!env.readState({{key, Value()}}).empty()) {
      throw ActionRejected(a.agentId + " already holds a projection");
    }
    PathProjection p;
    try {
      p.id = a.params.at("id").get<std::int64_t>();
      p.priority = a.params.at("priority").get<int>();
      p.hull.segments = edgesFromValue(a.params.value("hull", Value::array()));
      p.hull.marginMeters = a.params.value("margin", 0.0);
      if (a.params.contains("path")) {
        GraphPath path;
        for (const auto& n : a.params.at("path")) path.nodes.push_back(n.get<std::string>());
        if (!isSimplePath(env.graph(), path)) throw ActionRejected("path is not a simple path");
        p.projection = pathEdges(env.graph(), path);
      } else {
        for (const auto& e : a.params.at("projection")) p.projection.push_back(e.get<EdgeId>());
      }
      validateProjection(env.graph(), p);
    } catch (const nlohmann::json::exception& e) {
      throw ActionRejected(std::string("bad projection parameters: ") + e.what());
    } catch (const GraphError& e) {
      throw ActionRejected(e.what());
    }
    if (p.segments().empty()) throw ActionRejected("empty projection");
    env.writeState({{key, projectionToValue(p, a.agentId)}});
    raw->submit(Claim{p.id, p.priority, p.segments(), env.node(), env.now(), a.agentId});
    return {};
  });

  ve.registerVirtualAction("clear", [raw](VirtualEnvironment& env, const Action& a) -> Items {
    auto key = projectionKey(a.agentId);
    auto cur = env.readState({{key, Value()}});
    if (cur.empty()) throw ActionRejected(a.agentId + " holds no projection");
    Value v = cur.begin()->second;
    auto id = v.at("id").get<std::int64_t>();
    if (!raw->isGranted(id)) throw ActionRejected("projection " + std::to_string(id) + " is not locked");
    std::set<EdgeId> segs;
    if (a.params.value("all", false)) {
      segs = edgesFromValue(v.at("hull"));
      for (const auto& e : v.at("projection")) segs.insert(e.get<EdgeId>());
    } else {
      segs = edgesFromValue(a.params.value("segments", Value::array()));
    }
    raw->clear(id, segs);
    Value hull = Value::array();
    Value projection = Value::array();
    for (const auto& e : v.at("hull")) {
      if (!segs.count(e.get<EdgeId>())) hull.push_back(e);
    }
    for (const auto& e : v.at("projection")) {
      if (!segs.count(e.get<EdgeId>())) projection.push_back(e);
    }
    if (hull.empty() && projection.empty()) {
      env.eraseState({key});
      return {};
    }
    v["hull"] = hull;
    v["projection"] = projection;
    return {{key, v}};
  });

  ve.registerVirtualFocus("projection", [](const VirtualEnvironment& env, const Sense& s) {
    auto cur = env.readState({{projectionKey(s.agentId), Value()}});
    if (cur.empty()) return Value{{"type", "projection"}};
    return Value{{"projection", cur.begin()->second}, {"type", "projection"}};
  });
  return service;
}

std::vector<std::pair<std::int64_t, std::int64_t>> lockedOverlaps(
    const std::vector<const VirtualEnvironment*>& environments) {
  std::vector<std::pair<std::int64_t, std::set<EdgeId>>> locked;
  for (const auto* ve : environments) {
    for (const auto& [_, v] : ve->readPrefix("projection/")) {
      if (v.at("status") != toString(ProjectionStatus::locked)) continue;
      std::set<EdgeId> segs = edgesFromValue(v.at("hull"));
      for (const auto& e : v.at("projection")) segs.insert(e.get<EdgeId>());
      locked.emplace_back(v.at("id").get<std::int64_t>(), std::move(segs));
    }
  }
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (std::size_t i = 0; i < locked.size(); ++i) {
    for (std::size_t j = i + 1; j < locked.size(); ++j) {
      Claim a{locked[i].first, 0, locked[i].second, {}, 0, {}};
      Claim b{locked[j].first, 0, locked[j].second, {}, 0, {}};
      if (conflicts(a, b)) out.emplace_back(std::min(a.projectionId, b.projectionId),
                                            std::max(a.projectionId, b.projectionId));
    }
  }
  return out;
}

}  // namespace situ
