#include "situ/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace situ {

namespace {

const std::vector<std::string> kKeyedSections = {"scenario", "network", "protocol"};
const std::vector<std::string> kListSections = {"agents", "tasks", "events", "bookings", "tree"};

const std::map<std::string, std::set<std::string>> kAllowedKeys = {
    {"scenario", {"kind", "graph", "mode", "ticks", "seed"}},
    {"network", {"latency", "drop"}},
    {"protocol",
     {"delta", "rho", "ttl", "refresh", "explore", "age", "rangeUnit", "scopeUnit", "timer", "speed",
      "capacity", "thresholds", "multipliers", "maxDist", "lookahead", "roamWindow", "battery"}},
};

bool isKeyed(const std::string& s) {
  return std::find(kKeyedSections.begin(), kKeyedSections.end(), s) != kKeyedSections.end();
}
bool isList(const std::string& s) {
  return std::find(kListSections.begin(), kListSections.end(), s) != kListSections.end();
}

std::vector<std::string> words(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& parts, std::size_t from = 0) {
  std::string out;
  for (std::size_t i = from; i < parts.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += parts[i];
  }
  return out;
}

struct RawConfig {
  std::map<std::string, std::map<std::string, std::string>> keyed;
  std::map<std::string, std::vector<std::string>> lists;
};

RawConfig lex(std::string_view text) {
  RawConfig raw;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto where = "line " + std::to_string(lineNo);
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto parts = words(line);
    if (parts.empty()) continue;
    if (parts[0].front() == '[') {
      if (parts.size() != 1 || parts[0].back() != ']' || parts[0].size() < 3) {
        throw ConfigError(where + ": malformed section header");
      }
      section = parts[0].substr(1, parts[0].size() - 2);
      if (!isKeyed(section) && !isList(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      if (isKeyed(section)) raw.keyed[section];
      else raw.lists[section];
      continue;
    }
    if (section.empty()) throw ConfigError(where + ": content before the first section");
    if (isList(section)) {
      raw.lists[section].push_back(join(parts));
      continue;
    }
    std::string key = parts[0];
    std::vector<std::string> rest(parts.begin() + 1, parts.end());
    if (auto eq = key.find('='); eq != std::string::npos) {
      std::string tail = key.substr(eq + 1);
      key.erase(eq);
      if (!tail.empty()) rest.insert(rest.begin(), tail);
    } else if (!rest.empty() && rest[0].front() == '=') {
      rest[0].erase(0, 1);
      if (rest[0].empty()) rest.erase(rest.begin());
    } else {
      throw ConfigError(where + ": expected key = value");
    }
    if (key.empty() || rest.empty()) throw ConfigError(where + ": expected key = value");
    if (!kAllowedKeys.at(section).count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    }
    auto [_, fresh] = raw.keyed[section].emplace(key, join(rest));
    if (!fresh) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return raw;
}

std::string serializeRaw(const std::map<std::string, std::map<std::string, std::string>>& keyed,
                         const std::map<std::string, std::vector<std::string>>& lists) {
  std::ostringstream out;
  bool first = true;
  auto header = [&](const std::string& s) {
    if (!first) out << '\n';
    first = false;
    out << '[' << s << "]\n";
  };
  for (const auto& s : kKeyedSections) {
    auto it = keyed.find(s);
    if (it == keyed.end() || it->second.empty()) continue;
    header(s);
    for (const auto& [k, v] : it->second) out << k << " = " << v << '\n';
  }
  for (const auto& s : kListSections) {
    auto it = lists.find(s);
    if (it == lists.end() || it->second.empty()) continue;
    header(s);
    for (const auto& line : it->second) out << line << '\n';
  }
  return out.str();
}

template <typename T>
T parseInteger(const std::string& text, const std::string& what) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(what + ": expected an integer, got '" + text + "'");
  }
  return value;
}

double parseNumber(const std::string& text, const std::string& what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  }
  return value;
}

double positive(double v, const std::string& what) {
  if (v <= 0) throw ConfigError(what + " must be positive");
  return v;
}

Tick positiveTicks(const std::string& text, const std::string& what) {
  auto v = parseInteger<Tick>(text, what);
  if (v == 0) throw ConfigError(what + " must be positive");
  return v;
}

// Parses "key value key value ..." after `fixed` leading words.
std::map<std::string, std::string> options(const std::vector<std::string>& parts, std::size_t fixed,
                                           const std::set<std::string>& allowed, const std::string& what) {
  std::map<std::string, std::string> out;
  if ((parts.size() - fixed) % 2 != 0) throw ConfigError(what + ": dangling option");
  for (std::size_t i = fixed; i < parts.size(); i += 2) {
    if (!allowed.count(parts[i])) throw ConfigError(what + ": unknown option '" + parts[i] + "'");
    if (!out.emplace(parts[i], parts[i + 1]).second) {
      throw ConfigError(what + ": duplicate option '" + parts[i] + "'");
    }
  }
  return out;
}

void parseProtocol(const std::map<std::string, std::string>& kv, ProtocolConstants& p) {
  auto get = [&](const char* k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("delta")) {
    p.delta = parseNumber(*v, "delta");
    if (*p.delta < 0) throw ConfigError("delta must be non-negative");
  }
  if (auto v = get("rho")) {
    p.rho = parseNumber(*v, "rho");
    if (p.rho < 0) throw ConfigError("rho must be non-negative");
  }
  if (auto v = get("ttl")) p.ttl = positiveTicks(*v, "ttl");
  if (auto v = get("refresh")) p.refresh = positiveTicks(*v, "refresh");
  if (auto v = get("explore")) p.explore = positiveTicks(*v, "explore");
  if (auto v = get("age")) p.age = positiveTicks(*v, "age");
  if (auto v = get("timer")) p.timer = positiveTicks(*v, "timer");
  if (auto v = get("rangeUnit")) p.rangeUnit = positive(parseNumber(*v, "rangeUnit"), "rangeUnit");
  if (auto v = get("scopeUnit")) p.scopeUnit = positive(parseNumber(*v, "scopeUnit"), "scopeUnit");
  if (auto v = get("speed")) p.speed = positive(parseNumber(*v, "speed"), "speed");
  if (auto v = get("maxDist")) p.maxDist = positive(parseNumber(*v, "maxDist"), "maxDist");
  if (auto v = get("capacity")) {
    p.capacity = parseInteger<int>(*v, "capacity");
    if (p.capacity <= 0) throw ConfigError("capacity must be positive");
  }
  if (auto v = get("lookahead")) {
    p.lookahead = parseInteger<std::size_t>(*v, "lookahead");
    if (p.lookahead == 0) throw ConfigError("lookahead must be positive");
  }
  if (auto v = get("roamWindow")) p.roamWindow = parseInteger<Tick>(*v, "roamWindow");
  if (auto v = get("battery")) {
    p.battery = parseInteger<int>(*v, "battery");
    if (p.battery <= 0) throw ConfigError("battery must be positive");
  }
  if (auto v = get("thresholds")) {
    auto w = words(*v);
    if (w.size() != 3) throw ConfigError("thresholds needs three numbers");
    p.thresholds = {parseNumber(w[0], "thresholds"), parseNumber(w[1], "thresholds"),
                    parseNumber(w[2], "thresholds")};
    if (!(0 < p.thresholds.moderate && p.thresholds.moderate < p.thresholds.congested &&
          p.thresholds.congested < p.thresholds.jammed)) {
      throw ConfigError("thresholds must be positive and strictly increasing");
    }
  }
  if (auto v = get("multipliers")) {
    auto w = words(*v);
    if (w.size() != 4) throw ConfigError("multipliers needs four numbers");
    for (std::size_t i = 0; i < 4; ++i) {
      p.multipliers[i] = positive(parseNumber(w[i], "multipliers"), "multipliers");
    }
  }
  if (p.refresh >= p.ttl) throw ConfigError("refresh period must be shorter than ttl");
}

AgentSpec parseAgent(const std::string& line) {
  auto w = words(line);
  const std::string what = "agent '" + line + "'";
  if (w.empty()) throw ConfigError("empty agent line");
  if (w[0] == "agv" && w.size() == 3) return {w[0], w[1], w[2], {}};
  if (w[0] == "vehicle" && w.size() == 4) return {w[0], w[1], w[2], w[3]};
  if ((w[0] == "park" || w[0] == "charger") && w.size() == 2) return {w[0], {}, w[1], {}};
  throw ConfigError(what + ": expected 'agv <id> <node>', 'vehicle <id> <origin> <destination>', "
                    "'park <node>' or 'charger <node>'");
}

TaskSpec parseTask(const std::string& line) {
  auto w = words(line);
  if (w.size() < 2 || w[0] != "task") throw ConfigError("task line '" + line + "': expected 'task <id> ...'");
  const std::string what = "task " + w[1];
  auto kv = options(w, 2, {"at", "pickup", "dropoff", "type", "priority"}, what);
  for (const char* required : {"at", "pickup", "dropoff"}) {
    if (!kv.count(required)) throw ConfigError(what + ": missing '" + required + "'");
  }
  TaskSpec t;
  t.id = w[1];
  t.arrival = parseInteger<Tick>(kv["at"], what);
  t.pickup = kv["pickup"];
  t.dropoff = kv["dropoff"];
  if (kv.count("type")) t.type = kv["type"];
  if (kv.count("priority")) t.priority = parseInteger<int>(kv["priority"], what);
  if (t.priority < 1 || t.priority > 5) throw ConfigError(what + ": priority must be within 1..5");
  if (t.pickup == t.dropoff) throw ConfigError(what + ": pickup equals dropoff");
  return t;
}

EventSpec parseEvent(const std::string& line) {
  auto w = words(line);
  const std::string what = "event '" + line + "'";
  if (w.size() == 4 && w[0] == "leave" && w[2] == "at") {
    return {w[0], {}, w[1], {}, parseInteger<Tick>(w[3], what)};
  }
  if (w.size() == 6 && w[0] == "join" && w[4] == "at") {
    return {w[0], w[1], w[2], w[3], parseInteger<Tick>(w[5], what)};
  }
  throw ConfigError(what + ": expected 'leave <id> at <tick>' or 'join <type> <id> <node> at <tick>'");
}

BookingSpec parseBooking(const std::string& line) {
  auto w = words(line);
  const std::string what = "booking '" + line + "'";
  if (w.size() < 2 || w[0] != "booking") throw ConfigError(what + ": expected 'booking <edge> ...'");
  auto kv = options(w, 2, {"count", "start", "end"}, what);
  BookingSpec b;
  b.edge = parseInteger<EdgeId>(w[1], what);
  if (kv.count("count")) b.count = parseInteger<int>(kv["count"], what);
  if (kv.count("start")) b.start = parseInteger<Tick>(kv["start"], what);
  if (!kv.count("end")) throw ConfigError(what + ": missing 'end'");
  b.end = parseInteger<Tick>(kv["end"], what);
  if (b.count <= 0) throw ConfigError(what + ": count must be positive");
  if (b.end < b.start) throw ConfigError(what + ": end before start");
  return b;
}

}  // namespace

std::filesystem::path ScenarioConfig::resolvedGraphPath() const {
  std::filesystem::path p(graphPath);
  return p.is_absolute() ? p : baseDir / p;
}

std::string canonicalConfigText(std::string_view text) {
  RawConfig raw = lex(text);
  return serializeRaw(raw.keyed, raw.lists);
}

std::string serializeConfig(const ScenarioConfig& config) { return serializeRaw(config.keyed, config.lists); }

ScenarioConfig parseConfig(std::string_view text, const std::filesystem::path& baseDir) {
  RawConfig raw = lex(text);
  ScenarioConfig c;
  c.keyed = raw.keyed;
  c.lists = raw.lists;
  c.baseDir = baseDir;

  const auto& sc = c.keyed["scenario"];
  auto req = [&](const char* k) -> const std::string& {
    auto it = sc.find(k);
    if (it == sc.end()) throw ConfigError(std::string("[scenario] is missing '") + k + "'");
    return it->second;
  };
  c.kind = req("kind");
  if (c.kind != "agv" && c.kind != "traffic") throw ConfigError("kind must be 'agv' or 'traffic'");
  c.graphPath = req("graph");
  c.ticks = parseInteger<Tick>(req("ticks"), "ticks");
  if (auto it = sc.find("seed"); it != sc.end()) c.seed = parseInteger<std::uint64_t>(it->second, "seed");
  if (auto it = sc.find("mode"); it != sc.end()) {
    if (c.kind != "agv") throw ConfigError("mode applies to agv scenarios only");
    c.mode = it->second;
    if (c.mode != "dyncnet" && c.mode != "fields" && c.mode != "roam") {
      throw ConfigError("mode must be dyncnet, fields or roam");
    }
  } else if (c.kind == "agv") {
    throw ConfigError("agv scenarios need a mode");
  }

  if (auto it = c.keyed.find("network"); it != c.keyed.end()) {
    if (auto l = it->second.find("latency"); l != it->second.end()) {
      c.network.latencyTicks = parseInteger<Tick>(l->second, "latency");
    }
    if (auto d = it->second.find("drop"); d != it->second.end()) {
      c.network.dropProbability = parseNumber(d->second, "drop");
      if (c.network.dropProbability < 0 || c.network.dropProbability > 1) {
        throw ConfigError("drop must be within [0, 1]");
      }
    }
  }
  c.network.seed = c.seed;
  if (auto it = c.keyed.find("protocol"); it != c.keyed.end()) parseProtocol(it->second, c.protocol);

  std::set<std::string> ids;
  auto unique = [&](const std::string& id, const std::string& what) {
    if (!ids.insert(id).second) throw ConfigError("duplicate id '" + id + "' (" + what + ")");
  };
  for (const auto& line : c.lists["agents"]) {
    AgentSpec a = parseAgent(line);
    if (!a.id.empty()) unique(a.id, a.type);
    if (c.kind == "agv" && a.type == "vehicle") throw ConfigError("vehicle agents need a traffic scenario");
    if (c.kind == "traffic" && a.type != "vehicle") {
      throw ConfigError(a.type + " agents need an agv scenario");
    }
    c.agents.push_back(a);
  }
  for (const auto& line : c.lists["tasks"]) {
    TaskSpec t = parseTask(line);
    unique(t.id, "task");
    c.tasks.push_back(t);
  }
  if (!c.tasks.empty() && c.kind != "agv") throw ConfigError("tasks need an agv scenario");
  if (!c.tasks.empty() && c.mode == "roam") throw ConfigError("roam mode generates its own trips; remove [tasks]");
  for (const auto& line : c.lists["events"]) {
    EventSpec e = parseEvent(line);
    if (c.kind != "agv") throw ConfigError("join and leave events need an agv scenario");
    if (e.action == "join") {
      if (e.type != "agv") throw ConfigError("only agv agents can join");
      unique(e.id, "join");
    } else if (!ids.count(e.id)) {
      throw ConfigError("leave of unknown agent '" + e.id + "'");
    }
    c.events.push_back(e);
  }
  for (const auto& line : c.lists["bookings"]) {
    if (c.kind != "traffic") throw ConfigError("bookings need a traffic scenario");
    c.bookings.push_back(parseBooking(line));
  }
  if (!c.lists["tree"].empty() && c.kind != "agv") throw ConfigError("[tree] applies to agv scenarios only");
  for (auto it = c.lists.begin(); it != c.lists.end();) {
    if (it->second.empty()) it = c.lists.erase(it); else ++it;
  }
  for (auto it = c.keyed.begin(); it != c.keyed.end();) {
    if (it->second.empty()) it = c.keyed.erase(it); else ++it;
  }
  return c;
}

void validateConfig(const ScenarioConfig& c, const SegmentGraph& graph) {
  auto node = [&](const NodeId& n, const std::string& what) {
    if (!graph.hasNode(n)) throw ConfigError(what + " references unknown node '" + n + "'");
  };
  for (const auto& a : c.agents) {
    std::string what = a.id.empty() ? a.type : a.type + " " + a.id;
    node(a.node, what);
    if (a.type == "vehicle") node(a.destination, what);
  }
  for (const auto& t : c.tasks) {
    node(t.pickup, "task " + t.id);
    node(t.dropoff, "task " + t.id);
  }
  for (const auto& e : c.events) {
    if (e.action == "join") node(e.node, "join of " + e.id);
  }
  for (const auto& b : c.bookings) {
    if (!graph.hasEdge(b.edge)) throw ConfigError("booking references unknown edge " + std::to_string(b.edge));
  }
}

ScenarioConfig loadConfig(const std::filesystem::path& path, SegmentGraph* graphOut) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  ScenarioConfig c = parseConfig(buf.str(), path.parent_path());
  SegmentGraph graph;
  auto graphPath = c.resolvedGraphPath();
  if (!std::filesystem::exists(graphPath)) throw IoError("cannot read graph " + graphPath.string());
  try {
    graph = loadGraphFile(graphPath.string());
  } catch (const GraphError& e) {
    throw ConfigError(std::string("graph: ") + e.what());
  }
  validateConfig(c, graph);
  if (graphOut) *graphOut = std::move(graph);
  return c;
}

}  // namespace situ
