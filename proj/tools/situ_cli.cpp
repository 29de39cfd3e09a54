#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "situ/scenario.hpp"

namespace {

enum Exit { kOk = 0, kConfigError = 1, kInvariant = 2, kIoError = 3 };

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<situ::Tick> steps;
  std::string traceOut;
  std::string metricsOut;
};

int doRun(const RunArgs& args) {
  situ::SegmentGraph graph;
  situ::ScenarioConfig config = situ::loadConfig(args.config, &graph);
  if (args.seed) {
    config.seed = *args.seed;
    config.network.seed = *args.seed;
  }
  if (args.steps) config.ticks = *args.steps;

  std::ofstream trace;
  situ::RunOptions options;
  if (!args.traceOut.empty()) {
    trace.open(args.traceOut, std::ios::binary | std::ios::trunc);
    if (!trace) throw situ::IoError("cannot write trace to " + args.traceOut);
    options.traceSink = &trace;
  }
  situ::RunMetrics metrics = situ::runScenario(config, graph, options);
  if (trace.is_open() && !trace.flush()) throw situ::IoError("cannot write trace to " + args.traceOut);
  if (args.metricsOut.empty()) {
    std::cout << situ::formatMetrics(metrics);
  } else {
    situ::emitMetrics(metrics, args.metricsOut);
  }
  if (metrics.invariantViolations > 0) {
    std::cerr << "invariant violated on " << metrics.invariantViolations << " check(s)\n";
    return kInvariant;
  }
  return kOk;
}

int doValidate(const std::string& path) {
  situ::ScenarioConfig config = situ::loadConfig(path);
  std::cout << situ::serializeConfig(config);
  return kOk;
}

int doTraceHash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw situ::IoError("cannot read trace " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::printf("%016llx\n", static_cast<unsigned long long>(situ::hashTraceText(buf.str())));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Situated multi-agent coordination simulator"};
  app.require_subcommand(1);

  RunArgs run;
  std::uint64_t seed = 0;
  situ::Tick steps = 0;
  auto* runCmd = app.add_subcommand("run", "Run a scenario");
  runCmd->add_option("config", run.config, "Scenario file")->required();
  auto* seedOpt = runCmd->add_option("--seed", seed, "Override the scenario seed");
  auto* stepsOpt = runCmd->add_option("--steps", steps, "Override the run length in ticks");
  runCmd->add_option("--trace-out", run.traceOut, "Write the event trace here");
  runCmd->add_option("--metrics-out", run.metricsOut, "Write metrics here instead of stdout");

  std::string validatePath;
  auto* validateCmd = app.add_subcommand("validate", "Check a scenario file and print its canonical form");
  validateCmd->add_option("config", validatePath, "Scenario file")->required();

  std::string tracePath;
  auto* hashCmd = app.add_subcommand("trace-hash", "Print the FNV-1a 64 hash of a trace file");
  hashCmd->add_option("trace", tracePath, "Trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (runCmd->parsed()) {
      if (seedOpt->count()) run.seed = seed;
      if (stepsOpt->count()) run.steps = steps;
      return doRun(run);
    }
    if (validateCmd->parsed()) return doValidate(validatePath);
    return doTraceHash(tracePath);
  } catch (const situ::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const situ::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const situ::GraphError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kInvariant;
  }
}
