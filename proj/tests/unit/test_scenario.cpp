#include <sstream>

#include "doctest.h"
#include "situ/scenario.hpp"

using namespace situ;

namespace {

const std::filesystem::path kDir = SITU_SCENARIO_DIR;

struct Outcome {
  RunMetrics metrics;
  std::string trace;
};

Outcome run(const std::string& text) {
  ScenarioConfig c = parseConfig(text, kDir);
  SegmentGraph g = loadGraphFile(c.resolvedGraphPath().string());
  validateConfig(c, g);
  std::ostringstream trace;
  RunOptions opts;
  opts.traceSink = &trace;
  Outcome o{runScenario(c, g, opts), trace.str()};
  return o;
}

std::string agv(const std::string& mode, Tick ticks, const std::string& body) {
  return "[scenario]\nkind = agv\nmode = " + mode + "\ngraph = warehouse.graph\nticks = " + std::to_string(ticks) +
         "\nseed = 4\n[network]\nlatency = 1\n" + body;
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("one agv completes one task under dyncnet") {
  Outcome o = run(agv("dyncnet", 300, "[agents]\nagv a1 n0\n[tasks]\ntask t1 at 5 pickup n7 dropoff n13\n"));
  CHECK(o.metrics.tasksCompleted == 1);
  CHECK(o.metrics.invariantViolations == 0);
  CHECK(o.metrics.claimsGranted == o.metrics.claimsSubmitted);
  CHECK(o.metrics.meanAssignmentLatencyTicks > 0);
}

TEST_CASE("two agvs share one task under fields") {
  Outcome o = run(agv("fields", 400,
                      "[protocol]\nrangeUnit = 10\n[agents]\nagv a1 n0\nagv a2 n19\n[tasks]\n"
                      "task t1 at 5 pickup n7 dropoff n13\n"));
  CHECK(o.metrics.tasksCompleted == 1);
  CHECK(o.metrics.invariantViolations == 0);
  CHECK(count(o.trace, "\"performative\":\"granted\",\"protocol\":\"FieldTask\"}") == 1);
}

TEST_CASE("the traffic vehicle avoids the pre-booked arm") {
  Outcome o = run(
      "[scenario]\nkind = traffic\ngraph = diamond.graph\nticks = 120\nseed = 5\n[protocol]\ncapacity = 8\n"
      "[agents]\nvehicle v1 s t\n[bookings]\nbooking 1 count 7 start 0 end 1000\n");
  CHECK(o.metrics.vehiclesArrived == 1);
  CHECK(o.trace.find("\"path\":[\"s\",\"b\",\"t\"]") != std::string::npos);
  CHECK(o.trace.find("\"path\":[\"s\",\"a\",\"t\"]") == std::string::npos);
}

TEST_CASE("without bookings either arm is free and the vehicle still arrives") {
  Outcome o = run(
      "[scenario]\nkind = traffic\ngraph = diamond.graph\nticks = 120\nseed = 5\n[agents]\nvehicle v1 s t\n");
  CHECK(o.metrics.vehiclesArrived == 1);
  CHECK(o.metrics.bookingRejectCount == 0);
}

TEST_CASE("an empty run reports zeroed metrics") {
  Outcome o = run(agv("dyncnet", 0, "[agents]\nagv a1 n0\n"));
  CHECK(o.metrics.tasksCompleted == 0);
  CHECK(o.metrics.ticks == 0);
  std::string text = formatMetrics(o.metrics);
  CHECK(text.rfind("tasksCompleted 0\nmeanAssignmentLatencyTicks 0.000000\nswitchCount 0\n", 0) == 0);
  CHECK(count(text, "\n") == 14);
}

TEST_CASE("metrics text has a fixed order and hex hash") {
  RunMetrics m;
  m.tasksCompleted = 3;
  m.meanAssignmentLatencyTicks = 14;
  m.traceHash = 0xad;
  m.ticks = 400;
  m.seed = 7;
  CHECK(formatMetrics(m) ==
        "tasksCompleted 3\nmeanAssignmentLatencyTicks 14.000000\nswitchCount 0\nlockConflictWaitTicks 0\n"
        "bookingRejectCount 0\ntraceHash 00000000000000ad\nticks 400\nseed 7\nclaimsSubmitted 0\n"
        "claimsGranted 0\ninvariantViolations 0\nvehiclesArrived 0\nintentionSwitches 0\nmessagesLost 0\n");
  CHECK_THROWS_AS(emitMetrics(m, "/nonexistent-dir/m.txt"), IoError);
}

TEST_CASE("equal seeds give equal runs and the hash covers the trace") {
  std::string text = agv("roam", 150, "[agents]\nagv a1 n0\nagv a2 n10\nagv a3 n19\n");
  Outcome a = run(text);
  Outcome b = run(text);
  CHECK(a.trace == b.trace);
  CHECK(a.metrics.traceHash == b.metrics.traceHash);
  CHECK(a.metrics.traceHash == hashTraceText(a.trace));
  std::string other = text;
  other.replace(other.find("seed = 4"), 8, "seed = 5");
  CHECK(run(other).metrics.traceHash != a.metrics.traceHash);
}

TEST_CASE("lossy networks stay safe") {
  Outcome o = run(
      "[scenario]\nkind = agv\nmode = dyncnet\ngraph = warehouse.graph\nticks = 400\nseed = 2\n"
      "[network]\nlatency = 1\ndrop = 0.1\n[agents]\nagv a1 n0\nagv a2 n19\n[tasks]\n"
      "task t1 at 5 pickup n7 dropoff n13\ntask t2 at 20 pickup n16 dropoff n3\n");
  CHECK(o.metrics.invariantViolations == 0);
  CHECK(o.metrics.claimsGranted <= o.metrics.claimsSubmitted);
}
