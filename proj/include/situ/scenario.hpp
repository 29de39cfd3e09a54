#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "situ/ants.hpp"
#include "situ/agv.hpp"
#include "situ/config.hpp"

namespace situ {

struct RunMetrics {
  std::uint64_t tasksCompleted = 0;
  double meanAssignmentLatencyTicks = 0.0;
  std::uint64_t switchCount = 0;
  std::uint64_t lockConflictWaitTicks = 0;
  std::uint64_t bookingRejectCount = 0;
  std::uint64_t traceHash = 0;
  Tick ticks = 0;
  std::uint64_t seed = 0;
  std::uint64_t claimsSubmitted = 0;
  std::uint64_t claimsGranted = 0;
  std::uint64_t invariantViolations = 0;
  std::uint64_t vehiclesArrived = 0;
  std::uint64_t intentionSwitches = 0;
  std::uint64_t messagesLost = 0;
};

/// `key value` lines in a fixed order.
std::string formatMetrics(const RunMetrics& metrics);
/// Throws IoError when the file cannot be written.
void emitMetrics(const RunMetrics& metrics, const std::filesystem::path& path);

/// Every protocol schema the scenarios use.
ContentLanguage scenarioLanguage();

AgvParams agvParamsFrom(const ScenarioConfig& config, const SegmentGraph& graph);
AntParams antParamsFrom(const ScenarioConfig& config);
AgvBehaviour behaviourFrom(const ScenarioConfig& config);

struct RunOptions {
  std::ostream* traceSink = nullptr;
};

/// Builds the scenario, runs the kernel for config.ticks ticks and collects
/// the metrics. The trace hash covers every trace line.
RunMetrics runScenario(const ScenarioConfig& config, const SegmentGraph& graph, const RunOptions& options = {});

}  // namespace situ
