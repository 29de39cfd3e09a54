#include "situ/agv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace situ {

AgvMode agvModeFromString(const std::string& text) {
  if (text == "dyncnet") return AgvMode::dyncnet;
  if (text == "fields") return AgvMode::fields;
  if (text == "roam") return AgvMode::roam;
  throw Error("unknown agv mode '" + text + "'");
}

NodeId agvNode(const std::string& agv) { return "agv_" + agv; }
std::string transportAgentId(const std::string& taskId) { return "ta_" + taskId; }

// -- floor -------------------------------------------------------------------

WarehouseFloor::WarehouseFloor(const SegmentGraph& graph, double speedMetersPerTick, int batteryCapacity,
                               std::set<NodeId> chargers)
    : graph_(graph), speed_(speedMetersPerTick), batteryCapacity_(batteryCapacity),
      chargers_(std::move(chargers)) {}

void WarehouseFloor::addBody(const std::string& agv, const NodeId& node) {
  if (!graph_.hasNode(node)) throw Error("agv " + agv + " placed on unknown node " + node);
  Body b;
  b.node = node;
  b.battery = batteryCapacity_;
  bodies_[agv] = b;
}

void WarehouseFloor::removeBody(const std::string& agv) { bodies_.erase(agv); }

void WarehouseFloor::addLoad(const std::string& taskId, const NodeId& pickup, const NodeId& dropoff) {
  loads_[taskId] = Load{pickup, dropoff, std::nullopt, false};
}

void WarehouseFloor::advance() {
  for (auto& [_, b] : bodies_) {
    if (b.remaining == 0) continue;
    if (--b.remaining == 0) {
      b.node = b.target;
      b.edge.reset();
    }
  }
}

Value WarehouseFloor::observe(const std::string& agv) const {
  auto it = bodies_.find(agv);
  if (it == bodies_.end()) throw Error("no body for agv " + agv);
  const Body& b = it->second;
  Value carrying;
  Value dropoff;
  if (b.carrying) {
    carrying = *b.carrying;
    dropoff = loads_.at(*b.carrying).dropoff;
  }
  Value edge;
  if (b.edge) edge = *b.edge;
  return {{"battery", b.battery}, {"carrying", carrying}, {"dropoff", dropoff}, {"edge", edge},
          {"moving", b.remaining > 0}, {"node", b.node}, {"type", "body"}};
}

void WarehouseFloor::operate(const std::string& agv, const Value& op) {
  auto it = bodies_.find(agv);
  if (it == bodies_.end()) throw ActionRejected("no body for agv " + agv);
  Body& b = it->second;
  if (b.remaining > 0) throw ActionRejected(agv + " is in transit");
  const std::string kind = op.value("op", "");
  try {
    if (kind == "move") {
      EdgeId id = op.at("edge").get<EdgeId>();
      NodeId to = op.at("to").get<std::string>();
      if (!graph_.hasEdge(id)) throw ActionRejected("unknown edge");
      const Edge& e = graph_.edge(id);
      bool forward = e.from == b.node && e.to == to;
      bool backward = !graph_.directed() && e.to == b.node && e.from == to;
      if (!forward && !backward) throw ActionRejected("edge does not leave " + b.node + " towards " + to);
      b.edge = id;
      b.target = to;
      b.remaining = std::max<Tick>(1, static_cast<Tick>(std::ceil(e.lengthMeters / speed_)));
      b.battery = std::max(0, b.battery - 1);
    } else if (kind == "pick") {
      std::string task = op.at("task").get<std::string>();
      auto load = loads_.find(task);
      if (load == loads_.end()) throw ActionRejected("no load " + task);
      if (b.carrying) throw ActionRejected(agv + " already carries a load");
      if (load->second.carrier || load->second.delivered) throw ActionRejected("load " + task + " is taken");
      if (load->second.pickup != b.node) throw ActionRejected("load " + task + " is not at " + b.node);
      load->second.carrier = agv;
      b.carrying = task;
    } else if (kind == "drop") {
      if (!b.carrying) throw ActionRejected(agv + " carries nothing");
      Load& load = loads_.at(*b.carrying);
      if (load.dropoff != b.node) throw ActionRejected("dropoff is not " + b.node);
      load.delivered = true;
      b.carrying.reset();
      ++delivered_;
    } else if (kind == "charge") {
      if (!chargers_.count(b.node)) throw ActionRejected("no charger at " + b.node);
      b.battery = batteryCapacity_;
    } else {
      throw ActionRejected("unknown operation '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ActionRejected(std::string("bad operation: ") + e.what());
  }
}

// -- behaviour ---------------------------------------------------------------

namespace {

const Value* taskOf(const Items& k) {
  auto it = k.find("task");
  return it != k.end() && it->second.is_object() ? &it->second : nullptr;
}

std::string positionOf(const Items& k) {
  auto it = k.find("position");
  return it != k.end() && it->second.is_string() ? it->second.get<std::string>() : std::string();
}

bool flag(const Items& k, const char* name) {
  auto it = k.find(name);
  return it != k.end() && it->second == true;
}

bool phaseIs(const Items& k, const char* phase) {
  const Value* t = taskOf(k);
  return t && t->value("phase", "") == phase;
}

std::string targetOf(const Value& t) {
  if (t.value("phase", "") == "toDrop") return t.value("dropoff", "");
  return t.value("pickup", "");
}

}  // namespace

const std::map<std::string, std::function<bool(const Items&)>>& agvPredicates() {
  static const std::map<std::string, std::function<bool(const Items&)>> table = {
      {"hasTask", [](const Items& k) { return taskOf(k) != nullptr; }},
      {"idle", [](const Items& k) { return taskOf(k) == nullptr; }},
      {"toPick", [](const Items& k) { return phaseIs(k, "toPick"); }},
      {"toDrop", [](const Items& k) { return phaseIs(k, "toDrop"); }},
      {"atPickup",
       [](const Items& k) { return phaseIs(k, "toPick") && !flag(k, "moving") && positionOf(k) == targetOf(*taskOf(k)); }},
      {"atDropoff",
       [](const Items& k) { return phaseIs(k, "toDrop") && !flag(k, "moving") && positionOf(k) == targetOf(*taskOf(k)); }},
      {"notAtTarget",
       [](const Items& k) {
         const Value* t = taskOf(k);
         return t && positionOf(k) != targetOf(*t);
       }},
      {"fieldSensed", [](const Items& k) { return taskOf(k) == nullptr && flag(k, "fieldSensed"); }},
      {"lowBattery", [](const Items& k) { return flag(k, "lowBattery"); }},
  };
  return table;
}

const std::vector<std::string>& defaultAgvTreeLines() {
  static const std::vector<std::string> lines = {
      "role working top 1 weight 1",
      "node 1",
      "node 2",
      "node 3",
      "action 4 move",
      "action 5 pick",
      "action 6 move",
      "action 7 drop",
      "edge 1 2 1",
      "edge 1 3 1",
      "edge 2 4 1",
      "edge 2 5 1",
      "edge 3 6 1",
      "edge 3 7 1",
      "stimulus toPick 2 10",
      "stimulus toDrop 3 10",
      "stimulus notAtTarget 4 10",
      "stimulus notAtTarget 6 10",
      "stimulus atPickup 5 30",
      "stimulus atDropoff 7 30",
      "role parking top 10 weight 2",
      "node 10",
      "action 11 park",
      "action 12 followField",
      "edge 10 11 1",
      "edge 10 12 1",
      "stimulus fieldSensed 12 5",
      "role charging top 20 weight 1",
      "node 20",
      "action 21 charge",
      "edge 20 21 1",
      "stimulus lowBattery 20 50",
      "commitment work parking working hasTask",
  };
  return lines;
}

AgvBehaviour parseAgvBehaviour(const std::vector<std::string>& lines) {
  AgvBehaviour out;
  const auto& predicates = agvPredicates();
  auto predicate = [&](const std::string& name) {
    auto it = predicates.find(name);
    if (it == predicates.end()) throw Error("unknown predicate '" + name + "'");
    return it->second;
  };
  auto number = [](const std::string& text, const std::string& line) {
    try {
      std::size_t used = 0;
      double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw Error("tree line '" + line + "': bad number '" + text + "'");
    }
  };
  auto id = [&](const std::string& text, const std::string& line) {
    double v = number(text, line);
    if (v != std::floor(v)) throw Error("tree line '" + line + "': node ids are integers");
    return static_cast<TreeNodeId>(v);
  };
  for (const auto& line : lines) {
    std::istringstream in(line);
    std::vector<std::string> w;
    for (std::string s; in >> s;) w.push_back(s);
    if (w.empty()) continue;
    auto needRole = [&]() -> FreeFlowTree& {
      if (out.roles.empty()) throw Error("tree line '" + line + "' precedes any role");
      return out.roles.back();
    };
    if (w[0] == "role" && w.size() == 6 && w[2] == "top" && w[4] == "weight") {
      FreeFlowTree t;
      t.roleName = w[1];
      t.top = id(w[3], line);
      t.rootWeight = number(w[5], line);
      out.roles.push_back(std::move(t));
    } else if (w[0] == "node" && w.size() == 2) {
      needRole().nodes.push_back(TreeNode{id(w[1], line), false, ""});
    } else if (w[0] == "action" && w.size() == 3) {
      needRole().nodes.push_back(TreeNode{id(w[1], line), true, w[2]});
    } else if (w[0] == "edge" && w.size() == 4) {
      needRole().edges.push_back(TreeEdge{id(w[1], line), id(w[2], line), number(w[3], line)});
    } else if (w[0] == "stimulus" && w.size() == 4) {
      auto pred = predicate(w[1]);
      double magnitude = number(w[3], line);
      needRole().stimuli.push_back(Stimulus{w[1], id(w[2], line), [pred, magnitude](const Items& k) {
                                              return pred(k) ? magnitude : 0.0;
                                            }});
    } else if (w[0] == "commitment" && w.size() == 5) {
      out.commitments.push_back(SituatedCommitment{w[1], {w[2]}, w[3], predicate(w[4]), w[1]});
    } else {
      throw Error("malformed tree line '" + line + "'");
    }
  }
  if (out.roles.empty()) throw Error("tree defines no roles");
  for (const auto& r : out.roles) r.validate();
  return out;
}

AgvBehaviour defaultAgvBehaviour() { return parseAgvBehaviour(defaultAgvTreeLines()); }

void registerFieldTaskSchema(ContentLanguage& lang) {
  lang.defineTerm("taskId", Domain::text());
  lang.defineTerm("pickup", Domain::text());
  lang.defineTerm("dropoff", Domain::text());
  lang.definePerformative(kFieldTask, "take", {"taskId"}, true);
  lang.definePerformative(kFieldTask, "granted", {"taskId", "pickup", "dropoff"});
  lang.definePerformative(kFieldTask, "denied", {"taskId"});
}

namespace {

std::string fieldTaskKey(const SituatedAgent& agent, const MessageData& d) {
  const std::string task = d.get("taskId").get<std::string>();
  if (agent.kind() == "agv") return std::string(kFieldTask) + "/" + task;
  const std::string& other = d.sender == agent.id() ? d.receiver : d.sender;
  return std::string(kFieldTask) + "/" + other;
}

// Conversations whose last message is a reply.
std::vector<std::int64_t> answeredFieldTasks(SituatedAgent& agent) {
  std::vector<std::int64_t> out;
  for (const auto& [id, c] : agent.conversations().all()) {
    if (c.protocol != kFieldTask || c.history.empty()) continue;
    const auto& last = c.history.back().performative;
    if (last == "granted" || last == "denied") out.push_back(id);
  }
  return out;
}

MessageData fieldTaskMessage(const std::string& to, const char* performative, std::vector<ContentField> content) {
  return MessageData{0, "", to, kFieldTask, performative, std::move(content)};
}

constexpr int kCommBudget = 64;

Description bodyDescription() {
  return Description{
      "Body", [](const Representation& rep) { return rep.value("type", "") == "body"; },
      [](const Representation& rep) {
        return Items{{"position", rep.at("node")},       {"moving", rep.at("moving")},
                     {"battery", rep.at("battery")},     {"carrying", rep.at("carrying")},
                     {"carryingDropoff", rep.at("dropoff")}};
      }};
}

Description projectionDescription() {
  return Description{"Projection", [](const Representation& rep) { return rep.value("type", "") == "projection"; },
                     [](const Representation& rep) {
                       return Items{{"projection", rep.contains("projection") ? rep.at("projection") : Value()}};
                     }};
}

Description fieldsDescription() {
  return Description{"Fields", [](const Representation& rep) { return rep.value("type", "") == "fields"; },
                     [](const Representation& rep) { return Items{{"fields", rep.at("fields")}}; }};
}

}  // namespace

// -- AGV agent ---------------------------------------------------------------

AgvAgent::AgvAgent(std::string id, VirtualEnvironment& ve, AgvMode mode, AgvBehaviour behaviour,
                   AgvParams params, std::int64_t index, std::optional<NodeId> charger)
    : SituatedAgent(std::move(id), "agv", ve),
      mode_(mode),
      selector_(std::move(behaviour.roles), std::move(behaviour.commitments),
                {"move", "pick", "drop", "park", "followField", "charge"}),
      params_(params),
      index_(index),
      charger_(std::move(charger)) {
  addDescription(bodyDescription());
  addDescription(projectionDescription());
  addDescription(fieldsDescription());
  addDescription(parkLocationsDescription());
  Items init{{"lookahead", params_.lookahead}};
  if (charger_) init["charger"] = *charger_;
  knowledge().write(init);
  if (mode_ == AgvMode::dyncnet) {
    participant_ = std::make_shared<ParticipantHandler>(DynCnetParams{params_.delta}, [this](const NodeId& at) {
      auto pos = knowledge().get("position");
      if (!pos || !pos->is_string()) return std::numeric_limits<double>::infinity();
      return distanceMeters(env().graph(), pos->get<std::string>(), at);
    });
    addProtocol(participant_);
    participant_->fire(*this, ParticipantEvent{ParticipantEvent::Kind::readyToWork, "", "", 0.0});
  }
  if (mode_ == AgvMode::fields) {
    fieldTask_ = std::make_shared<QueuedProtocol>(
        kFieldTask, fieldTaskKey,
        [this](SituatedAgent&, const Conversation&, const MessageData& d) { onFieldTaskReply(d); },
        answeredFieldTasks);
    addProtocol(fieldTask_);
  }
}

void AgvAgent::assignTrip(const std::string& taskId, const NodeId& pickup, const NodeId& dropoff) {
  task_ = Value{{"dropoff", dropoff}, {"id", taskId}, {"phase", "toPick"}, {"pickup", pickup}};
}

void AgvAgent::perceiveAll() {
  perceive({"body", {"body", Value::object()}, {}});
  perceive({"projection", {"projection", Value::object()}, {}});
  auto position = knowledge().get("position");
  if (position && position->is_string()) {
    perceive({"park", {"parkLocations", Value::object()}, {"parkLocation", {{"position", *position}}}});
    auto locs = knowledge().get("parkLocations");
    if (locs && locs->is_array() && !locs->empty()) {
      knowledge().write({{"parkLocation", locs->front()}});
    } else {
      knowledge().erase({"parkLocation"});
    }
  }
  if (mode_ == AgvMode::fields) perceive({"fields", {"fields", Value::object()}, {}});
  auto battery = knowledge().get("battery");
  bool low = charger_ && battery && battery->get<int>() * 10 <= params_.batteryCapacity;
  knowledge().write({{"lowBattery", low}});
}

void AgvAgent::syncTaskFromProtocol() {
  const ParticipantState& s = participant_->state();
  bool committed = s.phase == ParticipantPhase::Intentional || s.phase == ParticipantPhase::Bound;
  auto carrying = knowledge().get("carrying");
  bool loaded = carrying && carrying->is_string();
  if (committed && s.provisionalTask && s.initiator) {
    if (!task_ || task_->at("id") != *s.provisionalTask) {
      auto loc = participant_->locations().find(*s.initiator);
      if (loc != participant_->locations().end()) {
        task_ = Value{{"id", *s.provisionalTask}, {"phase", "toPick"}, {"pickup", loc->second}};
      }
    }
  } else if (task_ && !loaded) {
    task_.reset();
  }
  if (s.phase != ParticipantPhase::Bound) boundTick_.reset();
}

void AgvAgent::requestFieldTask() {
  auto position = knowledge().get("position");
  auto listed = knowledge().get("fields");
  std::vector<TaskField> fields;
  if (listed && listed->is_array()) {
    for (const auto& v : *listed) {
      TaskField f = fieldFromValue(v);
      if (!deniedTasks_.count(f.taskId)) fields.push_back(f);
    }
  }
  if (!position || !position->is_string()) return;
  const NodeId at = position->get<std::string>();
  const SegmentGraph& g = env().graph();
  const double unit = params_.fields.rangeUnitMeters;
  NodeId step = gradientStep(at, fields, g, unit);
  bool sensed = combine(fields, at, g, unit) > 0;
  Items update{{"fieldSensed", sensed}};
  if (step != at) update["fieldStep"] = step;
  knowledge().write(update);
  if (step == at) knowledge().erase({"fieldStep"});
  if (awaitingTask_ && !task_ && env().now() - awaitingSince_ >= params_.timerTicks) {
    // No reply within a timer period: the take or its answer was lost.
    awaitingSince_ = env().now();
    fieldTask_->post(fieldTaskMessage(transportAgentId(*awaitingTask_), "take", {{"taskId", *awaitingTask_}}));
    return;
  }
  if (task_ || awaitingTask_ || !sensed) return;
  const TaskField* best = nullptr;
  double bestValue = 0.0;
  for (const auto& f : fields) {
    double v = fieldValue(f, at, g, unit);
    if (v > bestValue) {
      bestValue = v;
      best = &f;
    }
  }
  if (!best) return;
  awaitingTask_ = best->taskId;
  awaitingSince_ = env().now();
  fieldTask_->post(fieldTaskMessage(transportAgentId(best->taskId), "take", {{"taskId", best->taskId}}));
}

void AgvAgent::onFieldTaskReply(const MessageData& d) {
  const std::string task = d.get("taskId").get<std::string>();
  if (awaitingTask_ == task) awaitingTask_.reset();
  if (d.performative == "granted") {
    if (task_) return;
    task_ = Value{{"dropoff", d.get("dropoff")}, {"id", task}, {"phase", "toPick"}, {"pickup", d.get("pickup")}};
  } else if (d.performative == "denied") {
    deniedTasks_.insert(task);
  }
}

bool AgvAgent::perform(Action action) {
  try {
    act(action);
  } catch (const ActionRejected& e) {
    ++rejectedActions_;
    note("actionRejected", {{"action", action.name}, {"reason", e.what()}});
    return false;
  }
  if (action.name == "project") {
    ++claimsSubmitted_;
    ++projectionCounter_;
  } else if (action.name == "move") {
    transit_ = action.params.at("edge").get<EdgeId>();
  } else if (action.name == "drop") {
    ++deliveries_;
    const std::string id = task_->at("id").get<std::string>();
    Items done{{"taskDone/" + id, Value{{"agv", this->id()}, {"tick", env().now()}}}};
    env().writeState(done);
    env().emitSync({SyncKind::resourceMirror, env().node(), done});
    task_.reset();
    if (participant_) participant_->fire(*this, ParticipantEvent{ParticipantEvent::Kind::taskFinished, "", "", 0.0});
  }
  return true;
}

void AgvAgent::tick() {
  communicate(kCommBudget);
  perceiveAll();
  const Items& k = knowledge().all();
  const bool moving = flag(k, "moving");
  if (transit_ && !moving) {
    perform(Action{id(), "clear", {{"segments", Value::array({*transit_})}}});
    transit_.reset();
    perceive({"projection", {"projection", Value::object()}, {}});
  }
  auto position = knowledge().get("position");
  if (position && position->is_string() && position->get<std::string>() != mirroredPosition_) {
    mirroredPosition_ = position->get<std::string>();
    Items item{{positionKey(id()), mirroredPosition_}};
    env().writeState(item);
    env().emitSync({SyncKind::resourceMirror, env().node(), item});
  }

  if (mode_ == AgvMode::dyncnet) syncTaskFromProtocol();
  if (mode_ == AgvMode::fields) requestFieldTask();
  auto carrying = knowledge().get("carrying");
  if (task_ && carrying && carrying->is_string() && task_->at("id") == *carrying) {
    (*task_)["phase"] = "toDrop";
    (*task_)["dropoff"] = *knowledge().get("carryingDropoff");
  }
  Items update{{"nextProjectionId", index_ + 1024 * (projectionCounter_ + 1)},
               {"priority", task_ ? task_->value("priority", 1) : 1}};
  if (task_) update["task"] = *task_;
  knowledge().write(update);
  if (!task_) knowledge().erase({"task"});

  const Items& now = knowledge().all();
  selector_.updateRoles(now);
  selector_.updateCommitments(now);
  Selection sel = selector_.select();
  Refinement r = refineAction(sel.action, id(), now, env().graph());
  lastSelection_ = sel.action;
  lastReason_ = r.reason;
  if (!r.action) {
    auto proj = knowledge().get("projection");
    bool locked = proj && proj->is_object() && proj->value("status", "") == toString(ProjectionStatus::locked);
    if (locked && r.reason != "in transit" && r.reason != "waiting for lock") {
      perform(Action{id(), "clear", {{"all", true}}});
    }
  } else {
    Action action = *r.action;
    const bool taskMotion = action.name == "pick" || (action.name == "move" && sel.action == "move");
    bool hold = false;
    if (participant_ && taskMotion) {
      const ParticipantState& s = participant_->state();
      if (s.phase == ParticipantPhase::Intentional) {
        participant_->fire(*this, ParticipantEvent{ParticipantEvent::Kind::taskStarted, "", "", 0.0});
        boundTick_ = env().now();
      }
      if (action.name == "pick") {
        hold = participant_->state().phase != ParticipantPhase::Bound || !boundTick_ ||
               env().now() < *boundTick_ + params_.bindGrace;
      }
    }
    if (action.name == "pick" && task_) action.params["task"] = task_->at("id");
    if (!hold) perform(action);
  }
  communicate(kCommBudget);
}

// -- transport agent ---------------------------------------------------------

TransportAgent::TransportAgent(TaskSpec task, VirtualEnvironment& ve, AgvMode mode, AgvParams params,
                               Tick timerPhase)
    : SituatedAgent(transportAgentId(task.id), "transport", ve),
      task_(std::move(task)),
      mode_(mode),
      params_(params),
      readyTick_(ve.now()),
      nextTimer_(ve.now() + params.timerTicks + timerPhase) {
  env().writeState({{positionKey(id()), task_.pickup}});
  if (mode_ == AgvMode::dyncnet) {
    InitiatorState init;
    init.taskId = task_.id;
    init.taskType = task_.type;
    init.priority = task_.priority;
    init.location = task_.pickup;
    init.scope = scopeExpression(cfpScopeMeters(task_.priority, params_.scopeUnitMeters));
    init.cfpTimerTicks = params_.timerTicks;
    initiator_ = std::make_shared<InitiatorHandler>(init, DynCnetParams{params_.delta});
    addProtocol(initiator_);
  } else {
    fieldTask_ = std::make_shared<QueuedProtocol>(
        kFieldTask, fieldTaskKey,
        [this](SituatedAgent&, const Conversation&, const MessageData& d) {
          if (d.performative == "take") onTake(d);
        },
        answeredFieldTasks);
    addProtocol(fieldTask_);
  }
}

int TransportAgent::currentPriority() const {
  TaskField f{task_.id, FieldData{0, task_.priority, task_.pickup}};
  return agePriority(f, env().now() - readyTick_, params_.fields.ageTicks).data.priority;
}

void TransportAgent::onTake(const MessageData& d) {
  if (assignee_ == d.sender && !completed_) {
    fieldTask_->post(fieldTaskMessage(
        d.sender, "granted", {{"taskId", task_.id}, {"pickup", task_.pickup}, {"dropoff", task_.dropoff}}));
    return;
  }
  if (assignee_ || completed_) {
    fieldTask_->post(fieldTaskMessage(d.sender, "denied", {{"taskId", task_.id}}));
    return;
  }
  assignee_ = d.sender;
  assignedTick_ = env().now();
  removeField(env(), task_.id);
  fieldTask_->post(fieldTaskMessage(
      d.sender, "granted", {{"taskId", task_.id}, {"pickup", task_.pickup}, {"dropoff", task_.dropoff}}));
  note("taskGranted", {{"agv", d.sender}, {"task", task_.id}});
}

void TransportAgent::tick() {
  using K = InitiatorEvent::Kind;
  communicate(kCommBudget);
  const bool done = !env().readState({{"taskDone/" + task_.id, Value()}}).empty();
  auto agentAlive = [&](const std::string& agent) {
    auto at = env().addressOf(agent);
    return at && env().kernel().alive(*at);
  };
  if (mode_ == AgvMode::dyncnet) {
    if (!started_) {
      started_ = true;
      initiator_->fire(*this, InitiatorEvent{K::taskReady, "", 0.0, true});
    }
    const InitiatorState& s = initiator_->state();
    std::set<std::string> known;
    for (const auto& [agv, _] : s.proposals) known.insert(agv);
    if (s.provisionalWinner) known.insert(*s.provisionalWinner);
    for (const auto& agv : known) {
      if (departed_.count(agv) || agentAlive(agv)) continue;
      departed_.insert(agv);
      initiator_->fire(*this, InitiatorEvent{K::agvInOutScope, agv, 0.0, false});
    }
    if (env().now() >= nextTimer_) {
      nextTimer_ = env().now() + params_.timerTicks;
      auto phase = initiator_->state().phase;
      if (phase == InitiatorPhase::Active || phase == InitiatorPhase::Assigned) {
        InitiatorState& m = initiator_->mutableState();
        m.priority = currentPriority();
        m.scope = scopeExpression(cfpScopeMeters(m.priority, params_.scopeUnitMeters));
      }
      initiator_->fire(*this, InitiatorEvent{K::timerFired, "", 0.0, true});
    }
    const InitiatorState& after = initiator_->state();
    if (after.phase == InitiatorPhase::Executing && !assignedTick_) {
      assignedTick_ = env().now();
      assignee_ = after.provisionalWinner;
    }
    if (after.phase == InitiatorPhase::Executing && done) {
      initiator_->fire(*this, InitiatorEvent{K::taskCompleted, "", 0.0, true});
      completed_ = true;
    }
  } else {
    // The field goes out on the agent's first control cycle.
    if (!started_ && env().now() >= nextTimer_ - params_.timerTicks) {
      started_ = true;
      emitField(env(), TaskField{task_.id, FieldData{static_cast<std::int64_t>(fnv1a64(task_.id) >> 33),
                                                     task_.priority, task_.pickup}});
    }
    if (assignee_ && done) completed_ = true;
    if (assignee_ && !completed_ && !agentAlive(*assignee_)) {
      note("assigneeDeparted", {{"agv", *assignee_}, {"task", task_.id}});
      assignee_.reset();
      assignedTick_.reset();
      TaskField f{task_.id, FieldData{static_cast<std::int64_t>(fnv1a64(task_.id) >> 33), currentPriority(),
                                      task_.pickup}};
      emitField(env(), f);
    }
  }
  communicate(kCommBudget);
}

// -- world -------------------------------------------------------------------

AgvWorld::AgvWorld(Platform& platform, AgvMode mode, AgvBehaviour behaviour, AgvParams params,
                   std::vector<NodeId> parkLocations, std::optional<NodeId> charger, std::uint64_t seed)
    : platform_(platform),
      mode_(mode),
      behaviour_(std::move(behaviour)),
      params_(params),
      parkLocations_(std::move(parkLocations)),
      charger_(std::move(charger)),
      seed_(seed),
      floor_(platform.graph(), params.speedMetersPerTick, params.batteryCapacity,
             charger_ ? std::set<NodeId>{*charger_} : std::set<NodeId>{}) {
  platform_.registerAudience(kDynCnet, "agv");
  platform_.addNodeSetup([this](VirtualEnvironment& ve) {
    auto service = installLocking(ve);
    Kernel* kernel = &platform_.kernel();
    service->onGrant([this, kernel](const Claim& c) {
      ++claimsGranted_;
      lockWaitTicks_ += kernel->now() - c.claimTick;
    });
    locks_[ve.node()] = service;
    ve.registerSyncHandler(SyncKind::resourceMirror,
                           [](VirtualEnvironment& env, const SynchronizationUpdate& u) { env.writeState(u.payload); });
    ve.registerSyncHandler(SyncKind::membership, [](VirtualEnvironment& env, const SynchronizationUpdate& u) {
      if (u.payload.at("alive").get<bool>()) return;
      NodeId gone = u.payload.at("node").get<std::string>();
      std::set<std::string> stale;
      for (const auto& [name, _] : env.readPrefix("position/")) {
        auto at = env.addressOf(name.substr(std::string("position/").size()));
        if (at && *at == gone) stale.insert(name);
      }
      env.eraseState(stale);
    });
    if (mode_ == AgvMode::fields) installFieldService(ve, params_.fields);
  });
  platform_.joinNode(kWmsNode);
}

AgvAgent& AgvWorld::joinAgv(const std::string& id, const NodeId& node) {
  if (agvs_.count(id)) throw Error("agv " + id + " already exists");
  const NodeId host = agvNode(id);
  platform_.registerAddress(id, host, "agv");
  floor_.addBody(id, node);
  VirtualEnvironment& ve = platform_.joinNode(host);
  auto body = std::make_unique<AgvBody>(floor_, id);
  ve.setExternal(body.get());
  bodies_[id] = std::move(body);
  ve.registerExternalFocus(
      "body", [](const Sense&) { return Value{{"what", "body"}}; },
      [](const Sense&, const Value& observed) { return observed; });
  for (const char* op : {"move", "pick", "drop", "charge"}) {
    ve.registerExternalAction(op, [op](const VirtualEnvironment&, const Action& a) {
      Value v = a.params.is_object() ? a.params : Value::object();
      v["op"] = op;
      return v;
    });
  }
  Value locations = Value::array();
  for (const auto& p : parkLocations_) locations.push_back(p);
  ve.registerVirtualFocus("parkLocations", [locations](const VirtualEnvironment&, const Sense&) {
    return Value{{"locations", locations}, {"type", "parkLocations"}};
  });
  auto agent = std::make_unique<AgvAgent>(id, ve, mode_, behaviour_, params_, nextIndex_++, charger_);
  AgvAgent* raw = agent.get();
  ve.host(id, [raw](const Message& m) { raw->receive(m); });
  agvs_[id] = std::move(agent);
  return *raw;
}

void AgvWorld::leaveAgv(const std::string& id) {
  if (!agvAlive(id)) throw Error("agv " + id + " is not running");
  platform_.leaveNode(agvNode(id));
  floor_.removeBody(id);
}

bool AgvWorld::agvAlive(const std::string& id) const {
  return agvs_.count(id) && platform_.kernel().alive(agvNode(id));
}

void AgvWorld::addTask(const TaskSpec& task) {
  if (transports_.count(task.id)) throw Error("task " + task.id + " already exists");
  VirtualEnvironment* ve = platform_.environment(kWmsNode);
  if (!ve) throw Error("management node is down");
  const std::string ta = transportAgentId(task.id);
  platform_.registerAddress(ta, kWmsNode, "transport");
  floor_.addLoad(task.id, task.pickup, task.dropoff);
  Tick phase = SplitMix64::stream(seed_, "phase/" + ta).below(params_.timerTicks);
  auto agent = std::make_unique<TransportAgent>(task, *ve, mode_, params_, phase);
  TransportAgent* raw = agent.get();
  ve->host(ta, [raw](const Message& m) { raw->receive(m); });
  transports_[task.id] = std::move(agent);
}

AgvAgent* AgvWorld::agv(const std::string& id) {
  auto it = agvs_.find(id);
  return it == agvs_.end() ? nullptr : it->second.get();
}

TransportAgent* AgvWorld::transport(const std::string& taskId) {
  auto it = transports_.find(taskId);
  return it == transports_.end() ? nullptr : it->second.get();
}

std::uint64_t AgvWorld::claimsSubmitted() const {
  std::uint64_t n = 0;
  for (const auto& [_, a] : agvs_) n += a->claimsSubmitted();
  return n;
}

void AgvWorld::tick() {
  Kernel& kernel = platform_.kernel();
  floor_.advance();
  for (const auto& n : platform_.aliveNodes()) {
    if (auto* ve = platform_.environment(n)) ve->synchronizeLocal();
  }
  if (platform_.environment(kWmsNode)) {
    for (auto& [_, ta] : transports_) ta->tick();
  }
  for (auto& [id, agent] : agvs_) {
    if (!agvAlive(id)) continue;
    if (mode_ == AgvMode::roam && !agent->hasTask() && kernel.now() < params_.roamWindow) {
      const auto& nodes = platform_.graph().nodes();
      std::vector<NodeId> all(nodes.begin(), nodes.end());
      if (all.size() >= 2) {
        auto rng = SplitMix64::stream(seed_, "roam/" + id + "/" + std::to_string(tripCounter_));
        const NodeId at = floor_.bodies().at(id).node;
        NodeId pickup;
        do pickup = all[rng.below(all.size())]; while (pickup == at);
        NodeId dropoff;
        do dropoff = all[rng.below(all.size())]; while (dropoff == pickup);
        const std::string trip = "trip" + std::to_string(tripCounter_++);
        floor_.addLoad(trip, pickup, dropoff);
        agent->assignTrip(trip, pickup, dropoff);
        kernel.record(agvNode(id), "trip",
                      Value{{"agv", id}, {"dropoff", dropoff}, {"pickup", pickup}, {"trip", trip}}.dump());
      }
    }
    agent->tick();
  }
  checkSafety();
}

void AgvWorld::checkSafety() {
  Kernel& kernel = platform_.kernel();
  std::vector<const VirtualEnvironment*> envs;
  for (const auto& n : platform_.aliveNodes()) {
    if (auto* ve = platform_.environment(n)) envs.push_back(ve);
  }
  auto overlaps = lockedOverlaps(envs);
  if (!overlaps.empty()) {
    ++overlapTicks_;
    Value pairs = Value::array();
    for (const auto& [a, b] : overlaps) pairs.push_back(Value::array({a, b}));
    kernel.record(kKernelNode, "invariantViolation", Value{{"kind", "lockOverlap"}, {"pairs", pairs}}.dump());
  }
  for (const auto& [agv, body] : floor_.bodies()) {
    if (!body.edge) continue;
    bool covered = false;
    if (auto* ve = platform_.environment(agvNode(agv))) {
      auto cur = ve->readState({{projectionKey(agv), Value()}});
      if (!cur.empty()) {
        const Value& p = cur.begin()->second;
        if (p.at("status") == toString(ProjectionStatus::locked)) {
          for (const auto& e : p.at("projection")) covered = covered || e.get<EdgeId>() == *body.edge;
        }
      }
    }
    if (!covered) {
      ++unlockedMoves_;
      kernel.record(kKernelNode, "invariantViolation",
                    Value{{"agv", agv}, {"edge", *body.edge}, {"kind", "unlockedMove"}}.dump());
    }
  }
}

}  // namespace situ
