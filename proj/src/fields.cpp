#include "situ/fields.hpp"

#include <algorithm>

namespace situ {

namespace {

constexpr const char* kFieldPrefix = "field/";

// Owner-side bookkeeping lives next to the mirrored value.
Value ownedRecord(const TaskField& f, Tick emitted, int basePriority) {
  return {{"basePriority", basePriority}, {"emittedTick", emitted}, {"field", fieldToValue(f)}};
}

std::string ownedKey(const std::string& taskId) { return "fieldOwned/" + taskId; }

void spread(VirtualEnvironment& ve, const TaskField& f, const std::vector<NodeId>& targets = {}) {
  SynchronizationUpdate u{SyncKind::fieldSpread, ve.node(), {{fieldKey(f.taskId), fieldToValue(f)}}};
  ve.emitSync(u, targets);
}

}  // namespace

double fieldRange(int priority, double rangeUnitMeters) { return priority * rangeUnitMeters; }

double fieldValue(const TaskField& field, const NodeId& at, const SegmentGraph& graph,
                  double rangeUnitMeters) {
  double d = distanceMeters(graph, field.data.source, at);
  return std::max(0.0, fieldRange(field.data.priority, rangeUnitMeters) - d);
}

double combine(const std::vector<TaskField>& fields, const NodeId& at, const SegmentGraph& graph,
               double rangeUnitMeters) {
  double sum = 0.0;
  for (const auto& f : fields) sum += fieldValue(f, at, graph, rangeUnitMeters);
  return sum;
}

NodeId gradientStep(const NodeId& position, const std::vector<TaskField>& fields,
                    const SegmentGraph& graph, double rangeUnitMeters) {
  double here = combine(fields, position, graph, rangeUnitMeters);
  NodeId best = position;
  double bestValue = here;
  // adjacent() is sorted by node id, so the first maximum wins ties.
  for (const auto& adj : graph.adjacent(position)) {
    double v = combine(fields, adj.node, graph, rangeUnitMeters);
    if (v > bestValue) {
      bestValue = v;
      best = adj.node;
    }
  }
  return best;
}

TaskField agePriority(TaskField field, Tick unassignedTicks, Tick ageTicks) {
  if (ageTicks == 0) return field;
  Tick windows = unassignedTicks / ageTicks;
  Tick room = static_cast<Tick>(kMaxPriority - std::min(field.data.priority, kMaxPriority));
  field.data.priority += static_cast<int>(std::min(windows, room));
  return field;
}

std::string fieldKey(const std::string& taskId) { return kFieldPrefix + taskId; }

Value fieldToValue(const TaskField& f) {
  return {{"id", f.data.id}, {"priority", f.data.priority}, {"source", f.data.source},
          {"taskId", f.taskId}};
}

TaskField fieldFromValue(const Value& v) {
  try {
    return TaskField{v.at("taskId").get<std::string>(),
                     FieldData{v.at("id").get<std::int64_t>(), v.at("priority").get<int>(),
                               v.at("source").get<std::string>()}};
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad field value: ") + e.what());
  }
}

std::vector<TaskField> fieldsIn(const VirtualEnvironment& ve) {
  std::vector<TaskField> out;
  for (const auto& [name, value] : ve.readPrefix(kFieldPrefix)) out.push_back(fieldFromValue(value));
  return out;
}

void emitField(VirtualEnvironment& ve, const TaskField& field) {
  if (field.data.priority < kMinPriority || field.data.priority > kMaxPriority) {
    throw ActionRejected("field priority out of range");
  }
  if (!ve.graph().hasNode(field.data.source)) {
    throw ActionRejected("field source " + field.data.source + " not in graph");
  }
  ve.writeState({{fieldKey(field.taskId), fieldToValue(field)},
                 {ownedKey(field.taskId), ownedRecord(field, ve.now(), field.data.priority)}});
  spread(ve, field);
}

void removeField(VirtualEnvironment& ve, const std::string& taskId) {
  auto key = fieldKey(taskId);
  if (ve.readState({{key, Value()}}).empty()) return;
  ve.eraseState({key, ownedKey(taskId)});
  ve.emitSync({SyncKind::fieldRemove, ve.node(), {{key, Value()}}});
}

void installFieldService(VirtualEnvironment& ve, FieldParams params) {
  ve.registerSyncHandler(SyncKind::fieldSpread, [](VirtualEnvironment& env, const SynchronizationUpdate& u) {
    env.writeState(u.payload);
  });
  ve.registerSyncHandler(SyncKind::fieldRemove, [](VirtualEnvironment& env, const SynchronizationUpdate& u) {
    std::set<std::string> names;
    for (const auto& [name, _] : u.payload) names.insert(name);
    env.eraseState(names);
  });
  ve.registerSyncHandler(SyncKind::membership, [](VirtualEnvironment& env, const SynchronizationUpdate& u) {
    if (!u.payload.at("alive").get<bool>()) return;
    NodeId joined = u.payload.at("node").get<std::string>();
    for (const auto& [name, rec] : env.readPrefix("fieldOwned/")) {
      spread(env, fieldFromValue(rec.at("field")), {joined});
    }
  });
  ve.registerSyncItem("fieldAging", [params](VirtualEnvironment& env) {
    for (const auto& [name, rec] : env.readPrefix("fieldOwned/")) {
      TaskField f = fieldFromValue(rec.at("field"));
      TaskField base = f;
      base.data.priority = rec.at("basePriority").get<int>();
      Tick emitted = rec.at("emittedTick").get<Tick>();
      TaskField aged = agePriority(base, env.now() - emitted, params.ageTicks);
      if (aged.data.priority == f.data.priority) continue;
      env.writeState({{fieldKey(aged.taskId), fieldToValue(aged)},
                      {name, ownedRecord(aged, emitted, base.data.priority)}});
      spread(env, aged);
    }
  });
  ve.registerVirtualFocus("fields", [](const VirtualEnvironment& env, const Sense&) {
    Value list = Value::array();
    for (const auto& f : fieldsIn(env)) list.push_back(fieldToValue(f));
    return Value{{"fields", list}, {"type", "fields"}};
  });
  ve.registerVirtualAction("emit", [](VirtualEnvironment& env, const Action& a) -> Items {
    TaskField f;
    try {
      f = fieldFromValue(a.params);
    } catch (const Error& e) {
      throw ActionRejected(e.what());
    }
    emitField(env, f);
    return {};
  });
}

}  // namespace situ
