#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "situ/agent.hpp"
#include "situ/graph.hpp"

namespace situ {

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File that could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

struct AgentSpec {
  std::string type;  // agv, park, charger, vehicle
  std::string id;    // empty for park and charger
  NodeId node;
  NodeId destination;  // vehicles only
};

struct TaskSpec {
  std::string id;
  Tick arrival = 0;
  NodeId pickup;
  NodeId dropoff;
  std::string type = "regular";
  int priority = 1;
};

struct EventSpec {
  std::string action;  // join or leave
  std::string type;    // join: agent type
  std::string id;
  NodeId node;         // join only
  Tick at = 0;
};

struct BookingSpec {
  EdgeId edge = 0;
  int count = 1;
  Tick start = 0;
  Tick end = 0;
};

struct ProtocolConstants {
  std::optional<double> delta;  // defaults to the mean edge length
  double rho = 0.1;
  Tick ttl = 50;
  Tick refresh = 20;
  Tick explore = 20;
  Tick age = 100;
  double rangeUnit = 50.0;
  double scopeUnit = 50.0;
  Tick timer = 10;
  double speed = 10.0;
  int capacity = 8;
  CongestionThresholds thresholds;
  std::array<double, 4> multipliers{1.0, 1.5, 2.0, 3.0};
  double maxDist = 1500.0;
  std::size_t lookahead = 3;
  Tick roamWindow = 200;
  int battery = 1000;
};

/// Sectioned scenario file. Key-value sections: [scenario], [network],
/// [protocol]. Line-list sections: [agents], [tasks], [events], [bookings],
/// [tree]. `#` starts a comment.
struct ScenarioConfig {
  std::map<std::string, std::map<std::string, std::string>> keyed;
  std::map<std::string, std::vector<std::string>> lists;
  std::filesystem::path baseDir;

  std::string kind;  // agv or traffic
  std::string graphPath;
  std::string mode;  // agv only: dyncnet, fields or roam
  Tick ticks = 0;
  std::uint64_t seed = 0;
  NetworkConfig network;
  ProtocolConstants protocol;
  std::vector<AgentSpec> agents;
  std::vector<TaskSpec> tasks;
  std::vector<EventSpec> events;
  std::vector<BookingSpec> bookings;

  std::filesystem::path resolvedGraphPath() const;
};

/// Parses and validates everything except cross-references to the graph.
ScenarioConfig parseConfig(std::string_view text, const std::filesystem::path& baseDir = {});

/// Checks node and edge references against `graph`.
void validateConfig(const ScenarioConfig& config, const SegmentGraph& graph);

/// Reads `path`, parses, loads the referenced graph and validates.
ScenarioConfig loadConfig(const std::filesystem::path& path, SegmentGraph* graphOut = nullptr);

/// Canonical text: fixed section order, sorted keys, single spaces, no
/// comments or blank lines.
std::string serializeConfig(const ScenarioConfig& config);

/// Canonical form of a config text without interpreting it.
std::string canonicalConfigText(std::string_view text);

}  // namespace situ
