// Command-line front end. Talks to the simulator only through the C API.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mavswarm/mavswarm.h"

namespace {

constexpr int kExitUnsafe = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitInternal = 4;

using ScenarioPtr = std::unique_ptr<mavswarm_scenario, decltype(&mavswarm_scenario_free)>;
using ResultPtr = std::unique_ptr<mavswarm_result, decltype(&mavswarm_result_free)>;

int report(mavswarm_status s) {
  std::cerr << "error: " << mavswarm_last_error() << "\n";
  switch (s) {
    case MAVSWARM_CONFIG_ERROR:
    case MAVSWARM_UNKNOWN_SCENARIO:
    case MAVSWARM_INVALID_ARGUMENT:
    case MAVSWARM_SHAPE_MISMATCH:
      return kExitConfig;
    case MAVSWARM_IO_ERROR:
      return kExitIo;
    default:
      return kExitInternal;
  }
}

// Calls a text-producing C function twice: once for the size, once for the data.
template <typename F>
mavswarm_status fetch_text(F&& call, std::string& out) {
  size_t needed = 0;
  mavswarm_status s = call(nullptr, 0, &needed);
  if (s != MAVSWARM_OK && s != MAVSWARM_BUFFER_TOO_SMALL) return s;
  std::vector<char> buf(needed);
  s = call(buf.data(), buf.size(), &needed);
  if (s == MAVSWARM_OK) out.assign(buf.data());
  return s;
}

std::string metrics_path(const std::string& arg) {
  namespace fs = std::filesystem;
  return fs::is_directory(arg) ? (fs::path(arg) / "metrics.txt").string() : arg;
}

struct RunArgs {
  std::string scenario;
  long long seed = -1;
  double duration = 0.0;
  std::vector<std::string> sets;
  std::string out;
};

int cmd_run(const RunArgs& a) {
  mavswarm_scenario* raw = nullptr;
  if (auto s = mavswarm_scenario_load(a.scenario.c_str(), &raw); s != MAVSWARM_OK) return report(s);
  ScenarioPtr sc(raw, &mavswarm_scenario_free);

  if (a.seed >= 0) mavswarm_scenario_set_seed(sc.get(), static_cast<uint64_t>(a.seed));
  if (a.duration > 0.0) {
    if (auto s = mavswarm_scenario_set_duration(sc.get(), a.duration); s != MAVSWARM_OK)
      return report(s);
  }
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
      return kExitConfig;
    }
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (auto s = mavswarm_scenario_set(sc.get(), key.c_str(), value.c_str()); s != MAVSWARM_OK)
      return report(s);
  }

  mavswarm_result* rraw = nullptr;
  if (auto s = mavswarm_run(sc.get(), &rraw); s != MAVSWARM_OK) return report(s);
  ResultPtr res(rraw, &mavswarm_result_free);

  std::string out = a.out;
  if (out.empty()) {
    const std::string stem = std::filesystem::path(a.scenario).stem().string();
    out = "runs/" + stem;
  }
  if (auto s = mavswarm_result_write(res.get(), out.c_str()); s != MAVSWARM_OK) return report(s);

  std::string text;
  fetch_text([&](char* b, size_t c, size_t* n) { return mavswarm_result_metrics_text(res.get(), b, c, n); },
             text);
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);)
    if (line.rfind("run.", 0) == 0) std::cout << line << "\n";
  double mean = 0, max = 0;
  mavswarm_result_timing(res.get(), &mean, &max);
  std::printf("solve_ms.mean = %.4f\nsolve_ms.max = %.4f\n", mean, max);
  std::cout << "artifacts: " << out << "\n";

  const bool passed = mavswarm_result_passed(res.get()) == 1;
  std::cout << (passed ? "PASSED" : "FAILED: hard-radius violation or goal not reached") << "\n";
  return passed ? 0 : kExitUnsafe;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const std::string pa = metrics_path(a), pb = metrics_path(b);
  std::string table;
  const auto s = fetch_text(
      [&](char* buf, size_t c, size_t* n) { return mavswarm_compare_files(pa.c_str(), pb.c_str(), buf, c, n); },
      table);
  if (s != MAVSWARM_OK) return report(s);
  std::cout << table;
  return 0;
}

int cmd_list() {
  std::string names;
  if (auto s = fetch_text(mavswarm_scenario_names, names); s != MAVSWARM_OK) return report(s);
  std::cout << names;
  return 0;
}

int cmd_replay(const std::string& dir) {
  int matches = 0;
  if (auto s = mavswarm_replay_check(dir.c_str(), &matches); s != MAVSWARM_OK) return report(s);
  std::cout << (matches ? "replay matches metrics.txt" : "replay differs from metrics.txt") << "\n";
  return matches ? 0 : kExitUnsafe;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized NMPC multi-MAV collision avoidance simulator"};
  app.set_version_flag("--version", std::string(mavswarm_version()));
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Simulate a scenario and write artifacts");
  run_cmd->add_option("scenario", run.scenario, "Built-in scenario name or JSON file")->required();
  run_cmd->add_option("--seed", run.seed, "Random seed (default: the scenario's)")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--duration", run.duration, "Simulated seconds")->check(CLI::PositiveNumber);
  run_cmd->add_option("--set", run.sets, "Override, dotted.key=json_value (repeatable)");
  run_cmd->add_option("--out", run.out, "Output directory (default: runs/<scenario>)");

  std::string cmp_a, cmp_b;
  auto* cmp_cmd = app.add_subcommand("compare", "Side-by-side deltas of two metrics files");
  cmp_cmd->add_option("a", cmp_a, "metrics.txt or run directory")->required();
  cmp_cmd->add_option("b", cmp_b, "metrics.txt or run directory")->required();

  auto* list_cmd = app.add_subcommand("list-scenarios", "Print the built-in scenario names");

  std::string replay_dir;
  auto* replay_cmd = app.add_subcommand("replay", "Check metrics recomputed from a run's log");
  replay_cmd->add_option("dir", replay_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*run_cmd) return cmd_run(run);
  if (*cmp_cmd) return cmd_compare(cmp_a, cmp_b);
  if (*list_cmd) return cmd_list();
  if (*replay_cmd) return cmd_replay(replay_dir);
  return kExitConfig;
}
