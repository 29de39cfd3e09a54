#pragma once

#include <optional>
#include <string>
#include <vector>

#include "situ/environment.hpp"

namespace situ {

inline constexpr int kMinPriority = 1;
inline constexpr int kMaxPriority = 5;

struct FieldData {
  std::int64_t id = 0;
  int priority = kMinPriority;
  NodeId source;

  friend bool operator==(const FieldData&, const FieldData&) = default;
};

struct TaskField {
  std::string taskId;
  FieldData data;

  friend bool operator==(const TaskField&, const TaskField&) = default;
};

struct FieldParams {
  double rangeUnitMeters = 50.0;
  Tick ageTicks = 100;
};

double fieldRange(int priority, double rangeUnitMeters);

/// max(0, range(priority) - d), d being the path distance from the source.
double fieldValue(const TaskField& field, const NodeId& at, const SegmentGraph& graph,
                  double rangeUnitMeters);

double combine(const std::vector<TaskField>& fields, const NodeId& at, const SegmentGraph& graph,
               double rangeUnitMeters);

/// Best strictly improving neighbour of `position`, or `position` itself.
NodeId gradientStep(const NodeId& position, const std::vector<TaskField>& fields,
                    const SegmentGraph& graph, double rangeUnitMeters);

/// One priority step per full aging window, capped at the top level.
TaskField agePriority(TaskField field, Tick unassignedTicks, Tick ageTicks);

std::string fieldKey(const std::string& taskId);
Value fieldToValue(const TaskField& field);
TaskField fieldFromValue(const Value& value);

/// Fields currently mirrored in an environment, ordered by task id.
std::vector<TaskField> fieldsIn(const VirtualEnvironment& ve);

/// Installs field maintenance on a node: spread/remove handlers, priority
/// aging of fields this node emitted, the "fields" focus and the "emit"
/// action. Newly joined nodes receive the fields this node owns.
void installFieldService(VirtualEnvironment& ve, FieldParams params);

/// Places `field` in the local state and spreads it to all other nodes.
void emitField(VirtualEnvironment& ve, const TaskField& field);

/// Removes the field locally and everywhere else. Unknown ids are ignored.
void removeField(VirtualEnvironment& ve, const std::string& taskId);

}  // namespace situ
