#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "situ/config.hpp"

using namespace situ;

namespace {

const std::filesystem::path kDir = SITU_SCENARIO_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string errorOf(const std::string& text) {
  try {
    ScenarioConfig c = parseConfig(text, kDir);
    validateConfig(c, loadGraphFile(c.resolvedGraphPath().string()));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kBase =
    "[scenario]\nkind = agv\nmode = dyncnet\ngraph = warehouse.graph\nticks = 10\nseed = 1\n"
    "[agents]\nagv a1 n0\n";

}  // namespace

TEST_CASE("bundled scenarios load and serialize canonically") {
  for (const auto& entry : std::filesystem::directory_iterator(kDir)) {
    if (entry.path().extension() != ".scn") continue;
    CAPTURE(entry.path().string());
    SegmentGraph g;
    ScenarioConfig c = loadConfig(entry.path(), &g);
    std::string canon = serializeConfig(c);
    ScenarioConfig again = parseConfig(canon, kDir);
    CHECK(serializeConfig(again) == canon);
    CHECK(canonicalConfigText(canon) == canon);
    CHECK(canonicalConfigText(slurp(entry.path())) == canonicalConfigText(canonicalConfigText(slurp(entry.path()))));
    CHECK(again.agents.size() == c.agents.size());
    CHECK(again.tasks.size() == c.tasks.size());
    CHECK(again.seed == c.seed);
  }
}

TEST_CASE("parsed values land in the typed fields") {
  ScenarioConfig c = parseConfig(
      std::string(kBase) +
          "[network]\nlatency = 2\ndrop = 0.25\n[protocol]\ntimer = 7\nthresholds = 1 2 3\n"
          "[tasks]\ntask t1 at 5 pickup n7 dropoff n13 priority 3\n[events]\nleave a1 at 12\njoin agv a3 n4 at 50\n",
      kDir);
  CHECK(c.network.latencyTicks == 2);
  CHECK(c.network.dropProbability == doctest::Approx(0.25));
  CHECK(c.protocol.timer == 7);
  CHECK(c.protocol.thresholds.congested == 2.0);
  REQUIRE(c.tasks.size() == 1);
  CHECK(c.tasks[0].priority == 3);
  CHECK(c.tasks[0].arrival == 5);
  REQUIRE(c.events.size() == 2);
  CHECK(c.events[1].node == "n4");
  CHECK(c.events[1].at == 50);
}

TEST_CASE("comments and spacing do not change the canonical text") {
  std::string a = std::string(kBase) + "[tasks]\ntask t1 at 5 pickup n7 dropoff n13\n";
  std::string b =
      "# header\n[scenario]\n  seed=1\nticks = 10 # trailing\nkind   = agv\nmode = dyncnet\ngraph = warehouse.graph\n\n"
      "[agents]\nagv   a1  n0\n[tasks]\ntask t1 at 5 pickup n7 dropoff n13\n";
  CHECK(canonicalConfigText(a) == canonicalConfigText(b));
  CHECK(serializeConfig(parseConfig(a, kDir)) == serializeConfig(parseConfig(b, kDir)));
}

TEST_CASE("config errors name the offending item") {
  CHECK(errorOf(kBase) == "");
  CHECK(errorOf(std::string(kBase) + "[tasks]\ntask t1 at 5 pickup x dropoff n13\n") ==
        "task t1 references unknown node 'x'");
  CHECK(errorOf(std::string(kBase) + "agv a2 nowhere\n") == "agv a2 references unknown node 'nowhere'");
  CHECK(errorOf(std::string(kBase) + "[tasks]\ntask t1 at 5 pickup n1 dropoff n1\n").find("pickup equals dropoff") !=
        std::string::npos);
  CHECK(errorOf(std::string(kBase) + "[tasks]\ntask t1 at 5 pickup n1 dropoff n2 priority 9\n").find("1..5") !=
        std::string::npos);
  CHECK(errorOf(std::string(kBase) + "agv a1 n3\n").find("duplicate id 'a1'") != std::string::npos);
  CHECK(errorOf(std::string(kBase) + "[bogus]\n").find("unknown section") != std::string::npos);
  CHECK(errorOf(std::string(kBase) + "[network]\ndrop = 2\n").find("drop must be within") != std::string::npos);
  CHECK(errorOf(std::string(kBase) + "[protocol]\nttl = 10\nrefresh = 10\n").find("shorter than ttl") !=
        std::string::npos);
  CHECK(errorOf(std::string(kBase) + "[protocol]\ntimer = soon\n").find("expected an integer") != std::string::npos);
  CHECK(errorOf(std::string(kBase) + "[events]\nleave zz at 3\n").find("unknown agent 'zz'") != std::string::npos);
  CHECK(errorOf(std::string(kBase) + "[bookings]\nbooking 1 end 5\n").find("traffic") != std::string::npos);
  CHECK(errorOf("[scenario]\nkind = agv\n").find("missing") != std::string::npos);
  CHECK(errorOf("ticks = 3\n").find("before the first section") != std::string::npos);
  CHECK(errorOf("[scenario]\nkind = traffic\nmode = roam\ngraph = diamond.graph\nticks = 1\nseed = 1\n")
            .find("agv scenarios only") != std::string::npos);
}

TEST_CASE("missing files are I/O errors") {
  CHECK_THROWS_AS(loadConfig(kDir / "does_not_exist.scn"), IoError);
  auto tmp = std::filesystem::temp_directory_path() / "situ_missing_graph.scn";
  {
    std::ofstream out(tmp);
    out << "[scenario]\nkind = agv\nmode = roam\ngraph = nope.graph\nticks = 1\nseed = 1\n";
  }
  CHECK_THROWS_AS(loadConfig(tmp), IoError);
  std::filesystem::remove(tmp);
}
