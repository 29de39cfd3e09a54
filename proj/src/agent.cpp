#include "situ/agent.hpp"

#include <algorithm>
#include <cmath>

namespace situ {

void Knowledge::write(const Items& items) {
  for (const auto& [name, value] : items) {
    if (name.empty()) throw Error("knowledge item with empty name");
    items_[name] = value;
  }
}

void Knowledge::erase(const std::set<std::string>& names) {
  for (const auto& n : names) items_.erase(n);
}

std::optional<Value> Knowledge::get(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

// -- interpreting and filtering ---------------------------------------------

Items interpret(const Representation& rep, const std::vector<Description>& descriptions) {
  Items out;
  for (const auto& d : descriptions) {
    if (!d.matches(rep)) continue;
    for (auto& [name, value] : d.extract(rep)) out[name] = value;
  }
  return out;
}

namespace {

GraphPath pathFromValue(const Value& v) {
  GraphPath p;
  for (const auto& n : v) p.nodes.push_back(n.get<std::string>());
  return p;
}

Items shortestPathFilter(const Items& percept, const Value&, const SegmentGraph& graph) {
  Items out = percept;
  auto it = out.find("paths");
  if (it == out.end() || !it->second.is_array() || it->second.empty()) return out;
  std::vector<GraphPath> paths;
  for (const auto& p : it->second) paths.push_back(pathFromValue(p));
  GraphPath best = shortestPath(paths, graph);
  it->second = Value::array({Value(best.nodes)});
  return out;
}

Items parkLocationFilter(const Items& percept, const Value& params, const SegmentGraph& graph) {
  Items out = percept;
  auto it = out.find("parkLocations");
  if (it == out.end() || !it->second.is_array() || it->second.empty()) return out;
  const std::string from = params.at("position").get<std::string>();
  std::string best;
  double bestDist = INFINITY;
  for (const auto& loc : it->second) {
    auto node = loc.get<std::string>();
    double d = distanceMeters(graph, from, node);
    if (d < bestDist || (d == bestDist && node < best)) {
      bestDist = d;
      best = node;
    }
  }
  if (best.empty()) {
    it->second = Value::array();
  } else {
    it->second = Value::array({best});
  }
  return out;
}

}  // namespace

FilterTable::FilterTable() {
  add("identity", [](const Items& p, const Value&, const SegmentGraph&) { return p; });
  add("shortestPath", shortestPathFilter);
  add("parkLocation", parkLocationFilter);
}

void FilterTable::add(const std::string& name, FilterFn fn) { filters_[name] = std::move(fn); }

Items FilterTable::apply(const Items& percept, const Filter& filter, const SegmentGraph& graph) const {
  auto it = filters_.find(filter.name);
  if (it == filters_.end()) throw Error("unknown filter '" + filter.name + "'");
  return it->second(percept, filter.params, graph);
}

Items filterPercept(const Items& percept, const Filter& filter, const FilterTable& table,
                    const SegmentGraph& graph) {
  return table.apply(percept, filter, graph);
}

namespace {

constexpr std::pair<CongestionStatus, const char*> kCongestionNames[] = {
    {CongestionStatus::freeFlow, "freeFlow"},
    {CongestionStatus::moderate, "moderate"},
    {CongestionStatus::congested, "congested"},
    {CongestionStatus::jammed, "jammed"},
};

bool hasType(const Representation& rep, const char* type) {
  return rep.is_object() && rep.contains("type") && rep["type"] == type;
}

}  // namespace

const char* toString(CongestionStatus status) {
  for (const auto& [s, name] : kCongestionNames) {
    if (s == status) return name;
  }
  return "freeFlow";
}

std::optional<CongestionStatus> congestionFromString(const std::string& text) {
  for (const auto& [s, name] : kCongestionNames) {
    if (text == name) return s;
  }
  return std::nullopt;
}

CongestionStatus classifyCongestion(double load, const CongestionThresholds& t) {
  if (load < t.moderate) return CongestionStatus::freeFlow;
  if (load < t.congested) return CongestionStatus::moderate;
  if (load < t.jammed) return CongestionStatus::congested;
  return CongestionStatus::jammed;
}

Description congestionLevelDescription(CongestionThresholds thresholds) {
  return Description{
      "CongestionLevel",
      [](const Representation& rep) {
        if (!hasType(rep, "trafficObservation")) return false;
        for (const char* k : {"density", "intensity", "averageSpeed"}) {
          if (!rep.contains(k) || !rep[k].is_number() || rep[k].get<double>() < 0.0) return false;
        }
        return rep.contains("path") && rep["path"].is_array();
      },
      [thresholds](const Representation& rep) {
        auto status = classifyCongestion(rep["density"].get<double>(), thresholds);
        return Items{{"trafficState", {{"path", rep["path"]}, {"status", toString(status)}}}};
      }};
}

Description pathsDescription() {
  return Description{"GraphPaths",
                     [](const Representation& rep) { return hasType(rep, "paths") && rep.contains("paths"); },
                     [](const Representation& rep) { return Items{{"paths", rep["paths"]}}; }};
}

Description parkLocationsDescription() {
  return Description{
      "ParkLocations",
      [](const Representation& rep) { return hasType(rep, "parkLocations") && rep.contains("locations"); },
      [](const Representation& rep) { return Items{{"parkLocations", rep["locations"]}}; }};
}

// -- conversations -----------------------------------------------------------

std::int64_t ConversationStore::add(const std::string& protocol, const std::string& key,
                                    const MessageData& first) {
  if (byKey_.count(key)) throw ConversationError("conversation '" + key + "' already open");
  if (first.protocol != protocol) throw ConversationError("protocol mismatch");
  std::int64_t id = nextId_++;
  conversations_[id] = Conversation{id, protocol, key, {first}};
  byKey_[key] = id;
  return id;
}

const Conversation& ConversationStore::read(std::int64_t id) const {
  auto it = conversations_.find(id);
  if (it == conversations_.end()) throw ConversationError("unknown conversation " + std::to_string(id));
  return it->second;
}

void ConversationStore::update(std::int64_t id, const MessageData& data) {
  auto it = conversations_.find(id);
  if (it == conversations_.end()) throw ConversationError("unknown conversation " + std::to_string(id));
  if (data.protocol != it->second.protocol) throw ConversationError("protocol mismatch");
  it->second.history.push_back(data);
}

void ConversationStore::terminate(std::int64_t id) {
  auto it = conversations_.find(id);
  if (it == conversations_.end()) throw ConversationError("unknown conversation " + std::to_string(id));
  byKey_.erase(it->second.key);
  conversations_.erase(it);
}

std::optional<std::int64_t> ConversationStore::find(const std::string& key) const {
  auto it = byKey_.find(key);
  if (it == byKey_.end()) return std::nullopt;
  return it->second;
}

// -- agent -------------------------------------------------------------------

SituatedAgent::SituatedAgent(std::string id, std::string kind, VirtualEnvironment& ve)
    : id_(std::move(id)), kind_(std::move(kind)), ve_(&ve) {}

void SituatedAgent::note(const std::string& kind, const Value& payload) {
  Value p = payload;
  p["agent"] = id_;
  ve_->kernel().record(ve_->node(), kind, p.dump());
}

PerceptionNotice SituatedAgent::perceive(const PerceptionRequest& request) {
  if (!filters_.has(request.filter.name)) throw Error("unknown filter '" + request.filter.name + "'");
  PerceptionNotice notice{request.id, true, {}, {}};
  try {
    Representation rep = ve_->sense(Sense{id_, request.focus});
    Items percept = interpret(rep, descriptions_);
    notice.percept = filters_.apply(percept, request.filter, ve_->graph());
    knowledge_.write(notice.percept);
  } catch (const Error& e) {
    notice.ok = false;
    notice.reason = e.what();
  } catch (const nlohmann::json::exception& e) {
    notice.ok = false;
    notice.reason = e.what();
  }
  notices_.push_back(notice);
  return notice;
}

void SituatedAgent::addProtocol(std::shared_ptr<ProtocolHandler> handler) {
  handlers_.push_back(std::move(handler));
}

ProtocolHandler* SituatedAgent::handlerFor(const std::string& protocol) {
  for (auto& h : handlers_) {
    if (h->protocol() == protocol) return h.get();
  }
  return nullptr;
}

std::int64_t SituatedAgent::nextMessageId() {
  // Agent-scoped prefix keeps ids unique across the run.
  auto prefix = static_cast<std::int64_t>(fnv1a64(id_) & 0x3fffffffULL);
  return (prefix << 32) | (++messageCounter_ & 0xffffffffLL);
}

void SituatedAgent::flushOutbox() {
  while (!outbox_.empty()) {
    Message m = std::move(outbox_.front());
    outbox_.pop_front();
    try {
      ve_->sendMessage(m);
    } catch (const MalformedMessage& e) {
      note("malformed", {{"id", m.id}, {"reason", e.what()}});
    }
  }
}

bool SituatedAgent::communicateStep() {
  const ContentLanguage& lang = ve_->language();
  if (!inbox_.empty()) {
    Message m = std::move(inbox_.front());
    inbox_.pop_front();
    MessageData d;
    try {
      d = lang.decode(m);
    } catch (const MalformedMessage& e) {
      note("malformed", {{"id", m.id}, {"reason", e.what()}});
      return true;
    }
    ProtocolHandler* h = handlerFor(d.protocol);
    if (!h) {
      note("protocolViolation", {{"id", d.id}, {"reason", "unsupported protocol " + d.protocol}});
      return true;
    }
    std::string key = h->conversationKey(*this, d);
    auto conv = conversations_.find(key);
    if (!conv) {
      if (!lang.isInitial(d.protocol, d.performative)) {
        note("protocolViolation",
             {{"id", d.id}, {"performative", d.performative}, {"reason", "no conversation"}});
        return true;
      }
      conv = conversations_.add(d.protocol, key, d);
    } else {
      conversations_.update(*conv, d);
    }
    h->incoming(*this, conversations_.read(*conv), d);
    return true;
  }
  for (auto& h : handlers_) {
    auto out = h->outgoing(*this);
    if (!out) continue;
    MessageData d = std::move(*out);
    if (d.id == 0) d.id = nextMessageId();
    d.sender = id_;
    d.protocol = h->protocol();
    Message m;
    try {
      m = lang.encode(d);
    } catch (const MalformedMessage& e) {
      note("malformed", {{"performative", d.performative}, {"reason", e.what()}});
      return true;
    }
    std::string key = h->conversationKey(*this, d);
    if (auto conv = conversations_.find(key)) {
      conversations_.update(*conv, d);
    } else {
      conversations_.add(d.protocol, key, d);
    }
    outbox_.push_back(std::move(m));
    flushOutbox();
    return true;
  }
  bool any = false;
  for (auto& h : handlers_) {
    for (auto id : h->finished(*this)) {
      if (!conversations_.all().count(id)) continue;
      conversations_.terminate(id);
      any = true;
    }
  }
  return any;
}

int SituatedAgent::communicate(int budget) {
  int used = 0;
  while (used < budget && communicateStep()) ++used;
  return used;
}

}  // namespace situ
