#include <fstream>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "situ/scenario.hpp"

namespace py = pybind11;
using namespace situ;

namespace {

py::dict metricsDict(const RunMetrics& m) {
  py::dict d;
  d["tasksCompleted"] = m.tasksCompleted;
  d["meanAssignmentLatencyTicks"] = m.meanAssignmentLatencyTicks;
  d["switchCount"] = m.switchCount;
  d["lockConflictWaitTicks"] = m.lockConflictWaitTicks;
  d["bookingRejectCount"] = m.bookingRejectCount;
  d["traceHash"] = m.traceHash;
  d["ticks"] = m.ticks;
  d["seed"] = m.seed;
  d["claimsSubmitted"] = m.claimsSubmitted;
  d["claimsGranted"] = m.claimsGranted;
  d["invariantViolations"] = m.invariantViolations;
  d["vehiclesArrived"] = m.vehiclesArrived;
  d["intentionSwitches"] = m.intentionSwitches;
  d["messagesLost"] = m.messagesLost;
  return d;
}

py::tuple runConfig(ScenarioConfig config, const SegmentGraph& graph, std::optional<std::uint64_t> seed,
                    std::optional<Tick> steps) {
  if (seed) {
    config.seed = *seed;
    config.network.seed = *seed;
  }
  if (steps) config.ticks = *steps;
  std::ostringstream trace;
  RunOptions options;
  options.traceSink = &trace;
  RunMetrics m;
  {
    py::gil_scoped_release release;
    m = runScenario(config, graph, options);
  }
  return py::make_tuple(metricsDict(m), trace.str());
}

}  // namespace

PYBIND11_MODULE(situ, m) {
  m.doc() = "Situated multi-agent coordination simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<GraphError>(m, "GraphError", PyExc_ValueError);

  m.def(
      "run",
      [](const std::string& path, std::optional<std::uint64_t> seed, std::optional<Tick> steps) {
        SegmentGraph graph;
        ScenarioConfig config = loadConfig(path, &graph);
        return runConfig(std::move(config), graph, seed, steps);
      },
      py::arg("path"), py::arg("seed") = py::none(), py::arg("steps") = py::none(),
      "Runs a scenario file. Returns (metrics dict, trace text).");

  m.def(
      "run_text",
      [](const std::string& text, const std::string& baseDir, std::optional<std::uint64_t> seed,
         std::optional<Tick> steps) {
        ScenarioConfig config = parseConfig(text, baseDir);
        auto graphPath = config.resolvedGraphPath();
        if (!std::filesystem::exists(graphPath)) throw IoError("cannot read graph " + graphPath.string());
        SegmentGraph graph = loadGraphFile(graphPath.string());
        validateConfig(config, graph);
        return runConfig(std::move(config), graph, seed, steps);
      },
      py::arg("text"), py::arg("base_dir") = "", py::arg("seed") = py::none(), py::arg("steps") = py::none(),
      "Runs a scenario given as text; relative graph paths resolve against base_dir.");

  m.def(
      "validate", [](const std::string& path) { return serializeConfig(loadConfig(path)); }, py::arg("path"),
      "Canonical text of a valid scenario file.");

  m.def("canonical_config", [](const std::string& text) { return canonicalConfigText(text); }, py::arg("text"));

  m.def(
      "format_metrics",
      [](const py::dict& d) {
        RunMetrics r;
        r.tasksCompleted = d["tasksCompleted"].cast<std::uint64_t>();
        r.meanAssignmentLatencyTicks = d["meanAssignmentLatencyTicks"].cast<double>();
        r.switchCount = d["switchCount"].cast<std::uint64_t>();
        r.lockConflictWaitTicks = d["lockConflictWaitTicks"].cast<std::uint64_t>();
        r.bookingRejectCount = d["bookingRejectCount"].cast<std::uint64_t>();
        r.traceHash = d["traceHash"].cast<std::uint64_t>();
        r.ticks = d["ticks"].cast<Tick>();
        r.seed = d["seed"].cast<std::uint64_t>();
        r.claimsSubmitted = d["claimsSubmitted"].cast<std::uint64_t>();
        r.claimsGranted = d["claimsGranted"].cast<std::uint64_t>();
        r.invariantViolations = d["invariantViolations"].cast<std::uint64_t>();
        r.vehiclesArrived = d["vehiclesArrived"].cast<std::uint64_t>();
        r.intentionSwitches = d["intentionSwitches"].cast<std::uint64_t>();
        r.messagesLost = d["messagesLost"].cast<std::uint64_t>();
        return formatMetrics(r);
      },
      py::arg("metrics"));

  m.def("hash_trace", [](const std::string& text) { return hashTraceText(text); }, py::arg("text"));

  m.def(
      "paths_within",
      [](const std::string& graphText, const NodeId& from, const NodeId& to, double maxDist) {
        std::vector<std::vector<NodeId>> out;
        for (const auto& p : pathsWithin(parseGraph(graphText), from, to, maxDist)) out.push_back(p.nodes);
        return out;
      },
      py::arg("graph_text"), py::arg("origin"), py::arg("destination"), py::arg("max_dist"));

  m.def("field_range", &fieldRange, py::arg("priority"), py::arg("range_unit"));

  m.def(
      "default_activity",
      [](bool work) {
        AgvBehaviour b = defaultAgvBehaviour();
        SelectionInputs in;
        in.commitments["work"] = work;
        std::map<std::string, double> tops;
        ActivityAssignment a = propagate(b.roles, b.commitments, 1.0, in);
        for (const auto& r : b.roles) tops[r.roleName] = a.at(r.top);
        return tops;
      },
      py::arg("work"), "Activity at each role's top node for root activity 1.");

  m.def(
      "check_dyncnet",
      [](double delta, int timerBudget) {
        DynCnetCheckConfig c;
        c.delta = delta;
        c.timerBudget = timerBudget;
        DynCnetCheckResult r;
        {
          py::gil_scoped_release release;
          r = checkDynCnet(c);
        }
        py::dict d;
        d["ok"] = r.ok();
        d["states"] = r.states;
        d["terminalStates"] = r.terminalStates;
        d["transitions"] = r.transitions;
        d["safetyViolations"] = r.safetyViolations;
        d["badTerminals"] = r.badTerminals;
        return d;
      },
      py::arg("delta") = 50.0, py::arg("timer_budget") = 1);
}
