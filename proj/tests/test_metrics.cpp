#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mavswarm/errors.hpp"
#include "mavswarm/metrics.hpp"

using namespace mavswarm;

namespace {

// Two agents on the x axis, the second approaching the first at 0.1 m per row.
std::vector<LogRecord> synthetic_log() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<LogRecord> log;
  for (int k = 0; k < 20; ++k) {
    const Vec3 p0(0, 0, 1), p1(3.0 - 0.1 * k, 0, 1);
    const double d = (p1 - p0).norm();
    for (int i = 0; i < 2; ++i) {
      LogRecord r;
      r.t = 0.01 * k;
      r.agent = i == 0 ? 4 : 9;
      r.truth.segment<3>(0) = i == 0 ? p0 : p1;
      r.reference = i == 0 ? p0 : Vec3(3.0, 0, 1);
      r.goal = r.reference;
      r.slack = (i == 1 && k == 5) ? 2 : 0;
      r.ok = !(i == 0 && k == 7);
      r.distance = i == 0 ? std::vector<double>{nan, d} : std::vector<double>{d, nan};
      r.r_min = i == 0 ? std::vector<double>{nan, 1.2} : std::vector<double>{1.2, nan};
      r.r_th = i == 0 ? std::vector<double>{nan, 1.5} : std::vector<double>{1.5, nan};
      log.push_back(r);
    }
  }
  return log;
}

}  // namespace

TEST_CASE("metrics on a hand-built log") {
  const auto log = synthetic_log();
  const Metrics m = compute_metrics({4, 9}, log, 0.1);

  CHECK(m.at("run.agents") == 2);
  CHECK(m.at("run.records") == 40);
  CHECK(m.at("agent.4.path_length") == 0.0);
  CHECK(m.at("agent.9.path_length") == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(m.at("agent.4.goal_error") == 0.0);
  CHECK(m.at("agent.9.goal_error") == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(m.at("run.goals_reached") == 0);
  CHECK(m.at("agent.9.slack_activations") == 2);
  CHECK(m.at("agent.4.solver_failures") == 1);

  // d runs 3.0, 2.9, ..., 1.1: rows below 1.2 violate, rows at 1.1 and above are "close enough".
  CHECK(m.at("pair.4-9.min_distance") == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(m.at("pair.4-9.samples") == 20);
  CHECK(m.at("pair.4-9.violations") == 1);
  CHECK(m.at("run.violations") == 1);
  CHECK(m.at("run.passed") == 0);

  // rms over agent 9 rows: sqrt(mean((0.1 k)^2)).
  double s = 0;
  for (int k = 0; k < 20; ++k) s += 0.01 * k * k;
  CHECK(m.at("agent.9.rms_tracking_error") == doctest::Approx(std::sqrt(s / 20)).epsilon(1e-12));
}

TEST_CASE("histogram mass equals samples and supports the minimum") {
  const Metrics m = compute_metrics({4, 9}, synthetic_log(), 0.1);
  double mass = 0;
  int lowest = 1 << 30;
  for (const auto& [k, v] : m.values) {
    if (k.rfind("pair.4-9.hist.", 0) != 0) continue;
    mass += v;
    lowest = std::min(lowest, std::stoi(k.substr(14)));
  }
  CHECK(mass == m.at("pair.4-9.samples"));
  const double dmin = m.at("pair.4-9.min_distance");
  CHECK(dmin >= lowest * kHistogramBin);
  CHECK(dmin < (lowest + 1) * kHistogramBin);
}

TEST_CASE("format_number round-trips") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(3) == "3");
}

TEST_CASE("log csv round trip is exact") {
  const auto log = synthetic_log();
  std::stringstream ss;
  write_log(ss, {4, 9}, log);
  std::vector<int> ids;
  const auto back = read_log(ss, &ids);
  CHECK(ids == std::vector<int>{4, 9});
  REQUIRE(back.size() == log.size());
  std::stringstream again;
  write_log(again, ids, back);
  std::stringstream first;
  write_log(first, {4, 9}, log);
  CHECK(again.str() == first.str());
  CHECK(compute_metrics(ids, back, 0.1).text() == compute_metrics({4, 9}, log, 0.1).text());
}

TEST_CASE("metrics text parses back and self-compare is all zeros") {
  const Metrics m = compute_metrics({4, 9}, synthetic_log(), 0.1);
  std::istringstream in(m.text());
  const Metrics p = parse_metrics(in);
  CHECK(p.text() == m.text());

  std::istringstream table(compare_metrics(m, p));
  std::string line;
  std::getline(table, line);  // header
  int rows = 0;
  while (std::getline(table, line)) {
    std::istringstream row(line);
    std::string key, a, b, delta;
    row >> key >> a >> b >> delta;
    CHECK_MESSAGE(delta == "0", line);
    ++rows;
  }
  CHECK(rows == static_cast<int>(m.values.size()));
}

TEST_CASE("compare reports deltas and rejects shape mismatches") {
  Metrics a = compute_metrics({4, 9}, synthetic_log(), 0.1);
  a.values["agent.9.path_length"] = 2.0;
  Metrics b = a;
  b.values["agent.9.path_length"] = 2.5;
  const std::string t = compare_metrics(a, b);
  CHECK(t.find("agent.9.path_length") != std::string::npos);
  CHECK(t.find("  0.5\n") != std::string::npos);

  // Histogram bins present on one side only are zero on the other.
  Metrics c = a;
  c.values["pair.4-9.hist.099"] = 3;
  CHECK_NOTHROW(compare_metrics(a, c));

  Metrics d = a;
  d.values["agent.11.path_length"] = 1;
  CHECK_THROWS_AS(compare_metrics(a, d), ShapeMismatchError);
}

TEST_CASE("metrics parse errors name the line") {
  std::istringstream in("run.agents = 2\nbroken line\n");
  try {
    parse_metrics(in);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.where() == "line 2");
  }
}

TEST_CASE("replay of a written run") {
  auto cfg = builtin_scenario("cross2");
  cfg.duration = 1.0;
  const RunOutput run = run_scenario(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "mavswarm_replay_test";
  std::filesystem::remove_all(dir);
  write_run(dir.string(), run);
  for (const char* f : {"log.csv", "metrics.txt", "timing.csv", "scenario.json", "distances.csv"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(replay_matches(dir.string()));

  // Any edit to the stored metrics breaks the match.
  std::ifstream in(dir / "metrics.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  in.close();
  std::string text = ss.str();
  const auto pos = text.find("run.records = ");
  text.replace(pos, std::string("run.records = ").size(), "run.records = 1");
  std::ofstream(dir / "metrics.txt") << text;
  CHECK_FALSE(replay_matches(dir.string()));
  std::filesystem::remove_all(dir);
}
