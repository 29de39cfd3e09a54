#include "situ/dyncnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace situ {

const char* toString(InitiatorPhase p) {
  switch (p) {
    case InitiatorPhase::Active: return "Active";
    case InitiatorPhase::Assigned: return "Assigned";
    case InitiatorPhase::Switching: return "Switching";
    case InitiatorPhase::Executing: return "Executing";
    case InitiatorPhase::Completed: return "Completed";
  }
  return "?";
}

const char* toString(ParticipantPhase p) {
  switch (p) {
    case ParticipantPhase::Idle: return "Idle";
    case ParticipantPhase::Voting: return "Voting";
    case ParticipantPhase::Intentional: return "Intentional";
    case ParticipantPhase::Bound: return "Bound";
  }
  return "?";
}

namespace {

Outgoing msg(const std::string& to, const char* perf, Value content) {
  return Outgoing{to, perf, std::move(content)};
}

Outgoing cfpOf(const InitiatorState& s) {
  return msg(s.scope, "cfp", Value::array({s.taskType, s.priority, s.location}));
}

// Accepts the cheapest current offer (ties: smallest AGV id), if any.
void acceptBest(StepResult<InitiatorState>& r) {
  auto& s = r.state;
  if (s.proposals.empty()) return;
  auto best = s.proposals.begin();
  for (auto it = s.proposals.begin(); it != s.proposals.end(); ++it) {
    if (it->second < best->second) best = it;
  }
  s.phase = InitiatorPhase::Assigned;
  s.provisionalWinner = best->first;
  s.bestProposal = Proposal{best->first, best->second, s.taskId};
  s.pendingWinner.reset();
  r.messages.push_back(msg(best->first, "provisional-accept", Value::array({s.taskId})));
}

void dropWinner(StepResult<InitiatorState>& r) {
  auto& s = r.state;
  if (s.provisionalWinner) s.proposals.erase(*s.provisionalWinner);
  s.provisionalWinner.reset();
  s.bestProposal.reset();
  s.pendingWinner.reset();
  s.phase = InitiatorPhase::Active;
  acceptBest(r);
}

}  // namespace

StepResult<InitiatorState> initiatorStep(const InitiatorState& in, const InitiatorEvent& e,
                                         const DynCnetParams& params) {
  using K = InitiatorEvent::Kind;
  using P = InitiatorPhase;
  StepResult<InitiatorState> r{in, {}, {}};
  auto& s = r.state;
  if (!s.ready) {
    if (e.kind == K::taskReady) {
      s.ready = true;
      s.phase = P::Active;
      r.messages.push_back(cfpOf(s));
    }
    return r;
  }
  const bool isWinner = s.provisionalWinner && *s.provisionalWinner == e.agent;
  switch (e.kind) {
    case K::taskReady:
      break;
    case K::timerFired:
      if (s.phase == P::Active) {
        if (s.proposals.empty()) r.messages.push_back(cfpOf(s)); else acceptBest(r);
      } else if (s.phase == P::Assigned) {
        r.messages.push_back(cfpOf(s));
      }
      break;
    case K::proposalReceived:
      if (s.phase == P::Executing || s.phase == P::Completed) break;
      s.proposals[e.agent] = e.cost;
      if (s.phase == P::Assigned) {
        if (isWinner) {
          s.bestProposal->cost = e.cost;
        } else if (e.cost + params.delta <= s.bestProposal->cost) {
          s.phase = P::Switching;
          s.pendingWinner = e.agent;
          ++s.switches;
          r.messages.push_back(msg(*s.provisionalWinner, "abort", Value::array({s.taskId})));
        }
      }
      break;
    case K::boundReceived:
      if (s.phase == P::Assigned && isWinner) {
        s.phase = P::Executing;
      } else if ((s.phase == P::Executing || s.phase == P::Completed) && isWinner) {
        // duplicate
      } else {
        if (!(s.phase == P::Switching && isWinner)) {
          r.violations.push_back("bound from non-winner " + e.agent);
        }
        r.messages.push_back(msg(e.agent, "abort", Value::array({s.taskId})));
      }
      break;
    case K::retractReceived:
      if (s.phase == P::Executing || s.phase == P::Completed) break;
      if (isWinner && (s.phase == P::Assigned || s.phase == P::Switching)) {
        dropWinner(r);
      } else {
        s.proposals.erase(e.agent);
        if (s.pendingWinner && *s.pendingWinner == e.agent) s.pendingWinner.reset();
      }
      break;
    case K::taskCompleted:
      if (s.phase == P::Executing) {
        s.phase = P::Completed;
      } else {
        r.violations.push_back("completion outside Executing");
      }
      break;
    case K::agvInOutScope:
      if (e.entered) {
        if (s.phase == P::Active) r.messages.push_back(cfpOf(s));
        break;
      }
      if (s.phase == P::Executing || s.phase == P::Completed) break;
      if (isWinner && (s.phase == P::Assigned || s.phase == P::Switching)) {
        dropWinner(r);
      } else {
        s.proposals.erase(e.agent);
        if (s.pendingWinner && *s.pendingWinner == e.agent) s.pendingWinner.reset();
      }
      break;
  }
  return r;
}

StepResult<ParticipantState> participantStep(const ParticipantState& in, const ParticipantEvent& e,
                                             const DynCnetParams& params) {
  using K = ParticipantEvent::Kind;
  using P = ParticipantPhase;
  StepResult<ParticipantState> r{in, {}, {}};
  auto& s = r.state;
  const bool fromCurrent = s.initiator && *s.initiator == e.from;
  auto taskFor = [&](const std::string& initiator) {
    auto it = s.taskOf.find(initiator);
    return it == s.taskOf.end() ? std::string() : it->second;
  };
  switch (e.kind) {
    case K::readyToWork:
      if (s.phase == P::Idle) s.phase = P::Voting;
      break;
    case K::cfpReceived:
      if (s.phase == P::Voting) {
        s.costs[e.from] = e.cost;
        r.messages.push_back(msg(e.from, "proposal", Value::array({e.cost})));
      } else if (s.phase == P::Intentional) {
        s.costs[e.from] = e.cost;
        if (fromCurrent || e.cost + params.delta <= s.costs.at(*s.initiator)) {
          r.messages.push_back(msg(e.from, "proposal", Value::array({e.cost})));
        }
      }
      break;
    case K::provisionalAcceptReceived:
      s.taskOf[e.from] = e.taskId;
      if (s.phase == P::Voting) {
        s.phase = P::Intentional;
        s.initiator = e.from;
        s.provisionalTask = e.taskId;
      } else if (s.phase == P::Intentional) {
        if (fromCurrent) break;
        auto offered = s.costs.find(e.from);
        bool better = offered != s.costs.end() &&
                      offered->second + params.delta <= s.costs.at(*s.initiator);
        if (better) {
          r.messages.push_back(msg(*s.initiator, "retract", Value::array({*s.provisionalTask})));
          s.initiator = e.from;
          s.provisionalTask = e.taskId;
        } else {
          r.messages.push_back(msg(e.from, "retract", Value::array({e.taskId})));
        }
      } else {
        if (!(s.phase == P::Bound && fromCurrent)) {
          r.messages.push_back(msg(e.from, "retract", Value::array({e.taskId})));
        }
      }
      break;
    case K::abortReceived:
      if ((s.phase == P::Intentional || s.phase == P::Bound) && fromCurrent) {
        r.messages.push_back(msg(e.from, "retract", Value::array({*s.provisionalTask})));
        s.phase = P::Voting;
        s.initiator.reset();
        s.provisionalTask.reset();
      }
      break;
    case K::taskStarted:
      if (s.phase == P::Intentional) {
        s.phase = P::Bound;
        r.messages.push_back(msg(*s.initiator, "bound", Value::array({*s.provisionalTask})));
      }
      break;
    case K::taskFinished:
      if (s.phase == P::Bound) {
        s.costs.erase(*s.initiator);
        s.phase = P::Voting;
        s.initiator.reset();
        s.provisionalTask.reset();
      }
      break;
    case K::taskInOutScope:
      (void)taskFor;
      break;
  }
  return r;
}

double cfpScopeMeters(int priority, double scopeUnitMeters) { return priority * scopeUnitMeters; }

std::string scopeExpression(double meters) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), meters);
  return std::string(buf, res.ptr) + "m";
}

std::set<std::string> scopeMembers(const NodeId& center, double scopeMeters,
                                   const std::map<std::string, NodeId>& positions,
                                   const SegmentGraph& graph) {
  std::set<std::string> out;
  for (const auto& [agent, at] : positions) {
    if (distanceMeters(graph, center, at) <= scopeMeters) out.insert(agent);
  }
  return out;
}

void registerDynCnetSchema(ContentLanguage& lang) {
  lang.defineTerm("type", Domain::text());
  lang.defineTerm("priority", Domain::integer(1, 5));
  lang.defineTerm("location", Domain::text());
  lang.defineTerm("cost", Domain::nonNegative());
  lang.defineTerm("taskId", Domain::text());
  lang.definePerformative(kDynCnet, "cfp", {"type", "priority", "location"}, true);
  lang.definePerformative(kDynCnet, "proposal", {"cost"});
  for (const char* p : {"provisional-accept", "bound", "retract", "abort"}) {
    lang.definePerformative(kDynCnet, p, {"taskId"});
  }
}

// -- conformance -------------------------------------------------------------

namespace {

// Pairwise states: 0 idle, 1 solicited, 2 proposed, 3 accepted, 4 bound,
// 5 aborted (waiting for the retract).
int pairStep(int st, bool fromInitiator, const std::string& perf) {
  if (perf == "cfp") return fromInitiator ? std::max(st, 1) : -1;
  if (perf == "proposal") {
    if (fromInitiator || st == 0 || st == 4) return -1;
    return st == 1 ? 2 : st;
  }
  if (perf == "provisional-accept") {
    if (!fromInitiator || st < 2) return -1;
    return st == 2 ? 3 : st;
  }
  if (perf == "bound") {
    if (fromInitiator) return -1;
    if (st == 3) return 4;
    if (st == 5) return 5;
    return -1;
  }
  if (perf == "retract") {
    if (fromInitiator || st < 2) return -1;
    return 2;
  }
  if (perf == "abort") {
    if (!fromInitiator) return -1;
    if (st == 3 || st == 4 || st == 5) return 5;
    // An abort may follow a declined accept that crossed it on the wire.
    if (st == 2) return 2;
    return -1;
  }
  return -1;
}

}  // namespace

ConformanceResult checkConformance(const std::string& self, const std::vector<MessageData>& history) {
  std::map<std::string, int> pairs;
  bool cfpSeen = false;
  std::string initiator;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& m = history[i];
    if (m.protocol != kDynCnet) return {false, "foreign protocol in history"};
    bool sentBySelf = m.sender == self;
    bool fromInitiator;
    std::string counterpart;
    if (m.performative == "cfp") {
      fromInitiator = true;
      initiator = m.sender;
    } else if (m.performative == "proposal" || m.performative == "bound" || m.performative == "retract") {
      fromInitiator = false;
    } else {
      fromInitiator = true;
    }
    if (fromInitiator) {
      counterpart = sentBySelf ? m.receiver : self;
    } else {
      counterpart = sentBySelf ? self : m.sender;
    }
    if (m.performative == "cfp") {
      cfpSeen = true;
      for (auto& [_, st] : pairs) st = std::max(st, 1);
      if (!sentBySelf) pairs[self] = std::max(pairs[self], 1);
      continue;
    }
    auto [it, fresh] = pairs.try_emplace(counterpart, cfpSeen ? 1 : 0);
    (void)fresh;
    int next = pairStep(it->second, fromInitiator, m.performative);
    if (next < 0) {
      return {false, "unexpected " + m.performative + " at position " + std::to_string(i) +
                         " for " + counterpart};
    }
    it->second = next;
  }
  return {};
}

// -- handlers ----------------------------------------------------------------

namespace {

MessageData toData(const SituatedAgent& agent, const Outgoing& o) {
  MessageData d{0, agent.id(), o.receiver, kDynCnet, o.performative, {}};
  const auto& fields = agent.env().language().fields(kDynCnet, o.performative);
  for (std::size_t i = 0; i < fields.size() && i < o.content.size(); ++i) {
    d.content.push_back({fields[i], o.content[i]});
  }
  return d;
}

}  // namespace

InitiatorHandler::InitiatorHandler(InitiatorState initial, DynCnetParams params)
    : state_(std::move(initial)), params_(params) {}

std::string InitiatorHandler::conversationKey(const SituatedAgent& agent, const MessageData&) const {
  return std::string(kDynCnet) + "/" + agent.id();
}

void InitiatorHandler::fire(SituatedAgent& agent, const InitiatorEvent& event) {
  auto before = state_.phase;
  auto r = initiatorStep(state_, event, params_);
  state_ = std::move(r.state);
  for (auto& m : r.messages) queue_.push_back(std::move(m));
  auto& env = agent.env();
  for (const auto& v : r.violations) {
    env.kernel().record(env.node(), "protocolViolation",
                        Value{{"agent", agent.id()}, {"reason", v}}.dump());
  }
  if (state_.phase != before) {
    env.kernel().record(env.node(), "initiatorPhase",
                        Value{{"agent", agent.id()}, {"phase", toString(state_.phase)},
                              {"winner", state_.provisionalWinner.value_or("")}}
                            .dump());
  }
}

void InitiatorHandler::incoming(SituatedAgent& agent, const Conversation&, const MessageData& d) {
  using K = InitiatorEvent::Kind;
  InitiatorEvent e;
  e.agent = d.sender;
  if (d.performative == "proposal") {
    e.kind = K::proposalReceived;
    e.cost = d.get("cost").get<double>();
  } else if (d.performative == "bound") {
    e.kind = K::boundReceived;
  } else if (d.performative == "retract") {
    e.kind = K::retractReceived;
  } else {
    agent.env().kernel().record(agent.env().node(), "protocolViolation",
                                Value{{"agent", agent.id()}, {"performative", d.performative}}.dump());
    return;
  }
  fire(agent, e);
}

std::optional<MessageData> InitiatorHandler::outgoing(SituatedAgent& agent) {
  if (queue_.empty()) return std::nullopt;
  Outgoing o = std::move(queue_.front());
  queue_.pop_front();
  return toData(agent, o);
}

std::vector<std::int64_t> InitiatorHandler::finished(SituatedAgent& agent) {
  if (!queue_.empty()) return {};
  if (state_.phase != InitiatorPhase::Executing && state_.phase != InitiatorPhase::Completed) return {};
  auto id = agent.conversations().find(conversationKey(agent, {}));
  if (!id) return {};
  return {*id};
}

ParticipantHandler::ParticipantHandler(DynCnetParams params, CostFn cost)
    : params_(params), cost_(std::move(cost)) {}

std::string ParticipantHandler::conversationKey(const SituatedAgent& agent, const MessageData& d) const {
  const std::string& initiator = d.sender == agent.id() ? d.receiver : d.sender;
  return std::string(kDynCnet) + "/" + initiator;
}

void ParticipantHandler::fire(SituatedAgent& agent, const ParticipantEvent& event) {
  auto before = state_.phase;
  auto beforeTask = state_.provisionalTask;
  auto finishedInitiator = state_.initiator;
  auto r = participantStep(state_, event, params_);
  state_ = std::move(r.state);
  for (auto& m : r.messages) queue_.push_back(std::move(m));
  auto& env = agent.env();
  for (const auto& v : r.violations) {
    env.kernel().record(env.node(), "protocolViolation",
                        Value{{"agent", agent.id()}, {"reason", v}}.dump());
  }
  if (event.kind == ParticipantEvent::Kind::taskFinished && finishedInitiator) {
    done_.insert(*finishedInitiator);
  }
  if (state_.phase != before || state_.provisionalTask != beforeTask) {
    env.kernel().record(env.node(), "participantPhase",
                        Value{{"agent", agent.id()}, {"phase", toString(state_.phase)},
                              {"task", state_.provisionalTask.value_or("")}}
                            .dump());
  }
}

void ParticipantHandler::incoming(SituatedAgent& agent, const Conversation&, const MessageData& d) {
  using K = ParticipantEvent::Kind;
  ParticipantEvent e;
  e.from = d.sender;
  if (d.performative == "cfp") {
    e.kind = K::cfpReceived;
    NodeId location = d.get("location").get<std::string>();
    locations_[d.sender] = location;
    e.cost = cost_(location);
    if (!std::isfinite(e.cost)) return;
  } else if (d.performative == "provisional-accept") {
    e.kind = K::provisionalAcceptReceived;
    e.taskId = d.get("taskId").get<std::string>();
  } else if (d.performative == "abort") {
    e.kind = K::abortReceived;
    e.taskId = d.get("taskId").get<std::string>();
  } else {
    agent.env().kernel().record(agent.env().node(), "protocolViolation",
                                Value{{"agent", agent.id()}, {"performative", d.performative}}.dump());
    return;
  }
  fire(agent, e);
}

std::optional<MessageData> ParticipantHandler::outgoing(SituatedAgent& agent) {
  if (queue_.empty()) return std::nullopt;
  Outgoing o = std::move(queue_.front());
  queue_.pop_front();
  return toData(agent, o);
}

std::vector<std::int64_t> ParticipantHandler::finished(SituatedAgent& agent) {
  std::vector<std::int64_t> out;
  if (!queue_.empty()) return out;
  for (const auto& initiator : done_) {
    if (auto id = agent.conversations().find(std::string(kDynCnet) + "/" + initiator)) out.push_back(*id);
  }
  done_.clear();
  return out;
}

// -- exhaustive check --------------------------------------------------------

namespace {

struct Wire {
  std::string performative;
  std::string taskId;
  double cost = 0.0;
};

struct World {
  InitiatorState ini[2];
  ParticipantState par[2];
  // channel index: from * 4 + to over ids {ta0, ta1, agv0, agv1}
  std::deque<Wire> chan[16];
  int budget[2] = {0, 0};
  std::set<std::string> everBound[2];
};

const char* kIds[4] = {"ta0", "ta1", "agv0", "agv1"};

int idIndex(const std::string& id) {
  for (int i = 0; i < 4; ++i) {
    if (id == kIds[i]) return i;
  }
  return -1;
}

std::string encodeWorld(const World& w) {
  std::ostringstream os;
  for (const auto& s : w.ini) {
    os << static_cast<int>(s.phase) << ',' << s.provisionalWinner.value_or("-") << ','
       << s.pendingWinner.value_or("-") << ',' << (s.bestProposal ? s.bestProposal->cost : -1) << '[';
    for (const auto& [a, c] : s.proposals) os << a << ':' << c << ';';
    os << ']';
  }
  for (const auto& s : w.par) {
    os << static_cast<int>(s.phase) << ',' << s.initiator.value_or("-") << '[';
    for (const auto& [a, c] : s.costs) os << a << ':' << c << ';';
    os << ']';
  }
  for (const auto& c : w.chan) {
    os << '|';
    for (const auto& m : c) os << m.performative << ':' << m.cost << ';';
  }
  os << '#' << w.budget[0] << w.budget[1];
  for (const auto& b : w.everBound) {
    os << '{';
    for (const auto& a : b) os << a << ';';
    os << '}';
  }
  return os.str();
}

void post(World& w, int from, const std::vector<Outgoing>& msgs) {
  for (const auto& m : msgs) {
    Wire wire{m.performative, "", 0.0};
    if (m.performative == "proposal") wire.cost = m.content[0].get<double>();
    if (m.performative != "cfp" && m.performative != "proposal") wire.taskId = m.content[0].get<std::string>();
    if (m.performative == "cfp") {
      for (int to = 2; to < 4; ++to) w.chan[from * 4 + to].push_back(wire);
    } else {
      w.chan[from * 4 + idIndex(m.receiver)].push_back(wire);
    }
  }
}

struct Checker {
  const DynCnetCheckConfig& cfg;
  DynCnetParams params;
  DynCnetCheckResult result;
  // 1 = on the DFS stack, 2 = finished
  std::unordered_map<std::string, int> color;

  void applyInitiator(World& w, int i, const InitiatorEvent& e) {
    auto r = initiatorStep(w.ini[i], e, params);
    w.ini[i] = r.state;
    post(w, i, r.messages);
  }

  void applyParticipant(World& w, int a, const ParticipantEvent& e) {
    auto r = participantStep(w.par[a], e, params);
    w.par[a] = r.state;
    post(w, a + 2, r.messages);
    if (w.par[a].phase == ParticipantPhase::Bound) {
      int t = w.par[a].provisionalTask == std::string("t0") ? 0 : 1;
      w.everBound[t].insert(kIds[a + 2]);
    }
  }

  std::vector<World> successors(const World& w) {
    std::vector<World> out;
    bool quiescent = true;
    for (int c = 0; c < 16; ++c) {
      if (w.chan[c].empty()) continue;
      quiescent = false;
      World n = w;
      Wire m = n.chan[c].front();
      n.chan[c].pop_front();
      int from = c / 4;
      int to = c % 4;
      if (to < 2) {
        InitiatorEvent e;
        e.agent = kIds[from];
        e.cost = m.cost;
        if (m.performative == "proposal") e.kind = InitiatorEvent::Kind::proposalReceived;
        else if (m.performative == "bound") e.kind = InitiatorEvent::Kind::boundReceived;
        else e.kind = InitiatorEvent::Kind::retractReceived;
        applyInitiator(n, to, e);
      } else {
        ParticipantEvent e;
        e.from = kIds[from];
        e.taskId = m.taskId;
        if (m.performative == "cfp") {
          e.kind = ParticipantEvent::Kind::cfpReceived;
          e.cost = cfg.costs[to - 2][from];
        } else if (m.performative == "provisional-accept") {
          e.kind = ParticipantEvent::Kind::provisionalAcceptReceived;
        } else {
          e.kind = ParticipantEvent::Kind::abortReceived;
        }
        applyParticipant(n, to - 2, e);
      }
      out.push_back(std::move(n));
    }
    for (int i = 0; i < 2; ++i) {
      auto phase = w.ini[i].phase;
      bool timed = phase == InitiatorPhase::Active || phase == InitiatorPhase::Assigned;
      if (timed && w.budget[i] > 0) {
        World n = w;
        --n.budget[i];
        applyInitiator(n, i, {InitiatorEvent::Kind::timerFired, "", 0.0, true});
        out.push_back(std::move(n));
      } else if (quiescent && phase == InitiatorPhase::Active) {
        World n = w;
        applyInitiator(n, i, {InitiatorEvent::Kind::timerFired, "", 0.0, true});
        out.push_back(std::move(n));
      }
    }
    for (int a = 0; a < 2; ++a) {
      if (w.par[a].phase != ParticipantPhase::Intentional) continue;
      World n = w;
      applyParticipant(n, a, {ParticipantEvent::Kind::taskStarted, "", "", 0.0});
      out.push_back(std::move(n));
    }
    return out;
  }

  void checkSafety(const World& w) {
    for (int t = 0; t < 2; ++t) {
      int bound = 0;
      for (const auto& p : w.par) {
        if (p.phase == ParticipantPhase::Bound && p.provisionalTask == "t" + std::to_string(t)) ++bound;
      }
      if (bound > 1) result.safetyViolations.push_back("two AGVs bound to t" + std::to_string(t));
    }
    if (w.ini[0].phase == InitiatorPhase::Executing && w.ini[1].phase == InitiatorPhase::Executing &&
        w.ini[0].provisionalWinner == w.ini[1].provisionalWinner) {
      result.safetyViolations.push_back("one AGV executing two tasks");
    }
    for (int i = 0; i < 2; ++i) {
      if (w.ini[i].phase != InitiatorPhase::Executing) continue;
      int a = idIndex(*w.ini[i].provisionalWinner) - 2;
      const auto& p = w.par[a];
      bool consistent = p.phase == ParticipantPhase::Bound && p.initiator == std::string(kIds[i]);
      bool inFlightAbort = false;
      for (const auto& m : w.chan[i * 4 + a + 2]) inFlightAbort = inFlightAbort || m.performative == "abort";
      if (!consistent && !inFlightAbort) {
        result.safetyViolations.push_back(std::string(kIds[i]) + " executing without a bound winner");
      }
    }
  }

  void run(const World& start) {
    struct Frame {
      std::string key;
      std::vector<World> next;
      std::size_t index = 0;
    };
    std::vector<Frame> stack;
    auto enter = [&](const World& w) {
      std::string key = encodeWorld(w);
      auto it = color.find(key);
      if (it != color.end()) {
        if (it->second == 1) result.cycle = true;
        return;
      }
      color[key] = 1;
      ++result.states;
      checkSafety(w);
      auto next = successors(w);
      result.transitions += next.size();
      if (next.empty()) {
        ++result.terminalStates;
        bool good = w.ini[0].phase == InitiatorPhase::Executing && w.ini[1].phase == InitiatorPhase::Executing;
        if (!good && result.badTerminals.size() < 8) result.badTerminals.push_back(key);
        if (w.everBound[0].size() > 1 || w.everBound[1].size() > 1) ++result.rebinds;
      }
      stack.push_back(Frame{std::move(key), std::move(next), 0});
    };
    enter(start);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.index == f.next.size()) {
        color[f.key] = 2;
        stack.pop_back();
        continue;
      }
      World w = std::move(f.next[f.index++]);
      enter(w);
    }
  }
};

}  // namespace

DynCnetCheckResult checkDynCnet(const DynCnetCheckConfig& config) {
  Checker checker{config, DynCnetParams{config.delta}, {}, {}};
  World w;
  for (int i = 0; i < 2; ++i) {
    w.ini[i].taskId = "t" + std::to_string(i);
    w.ini[i].location = "n" + std::to_string(i);
    w.budget[i] = config.timerBudget;
    w.par[i].phase = ParticipantPhase::Voting;
  }
  for (int i = 0; i < 2; ++i) checker.applyInitiator(w, i, {InitiatorEvent::Kind::taskReady, "", 0.0, true});
  checker.run(w);
  return checker.result;
}

}  // namespace situ
