#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mavswarm/avoidance.hpp"
#include "mavswarm/dynamics.hpp"
#include "mavswarm/observer.hpp"
#include "mavswarm/ocp.hpp"
#include "mavswarm/sqp.hpp"

namespace mavswarm {

struct AgentConfig {
  int id = 0;
  int rank = 0;                    // 0 is the highest priority; all equal means reciprocal
  std::vector<Vec3> waypoints;     // first entry is the start; one entry means hover
  std::vector<double> durations;   // one per segment
  double reference_start = 0.0;    // hold the first waypoint until this time
  double yaw = 0.0;
  ModelParams model;
  Vec3 wind = Vec3::Zero();        // constant external force on the plant, N
  double wind_onset = 0.0;
  double clock_skew = 0.0;         // own clock = sim time + skew
  double sigma_position = 0.005;   // measurement noise, m
  double sigma_velocity = 0.005;   // m/s
  double sigma_attitude = 0.001;   // rad

  Vec3 start() const { return waypoints.front(); }
  Vec3 goal() const { return waypoints.back(); }
  ReferenceTrajectory reference() const;
};

struct NetworkConfig {
  double delay = 0.0;    // s
  double jitter = 0.0;   // uniform extra delay in [0, jitter)
  double drop = 0.0;     // Bernoulli drop probability
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 1;
  double duration = 10.0;
  double control_rate = 100.0;
  int plant_substeps = 10;
  double mismatch = 0.1;           // plant tau and drag drawn within +-this fraction
  bool compensate_delay = true;
  double goal_tolerance = 0.1;
  std::vector<AgentConfig> agents;
  NetworkConfig network;
  CollisionParams collision;
  OcpConfig ocp = OcpConfig::defaults();
  ObserverParams observer;
  SqpSettings sqp;

  double dt() const { return 1.0 / control_rate; }
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

std::vector<std::string> scenario_names();

/// Throws UnknownScenarioError.
ScenarioConfig builtin_scenario(const std::string& name);

/// Scenario as JSON text and back. Parse errors name the line and column,
/// schema errors the dotted field path.
std::string scenario_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_from_json(const std::string& text);

/// Applies `key=value` (dotted path, JSON or bare-string value) to the scenario.
ScenarioConfig apply_overrides(const ScenarioConfig& config,
                               const std::vector<std::pair<std::string, std::string>>& overrides);

/// A built-in name, or otherwise a path to a JSON scenario file.
ScenarioConfig load_scenario(const std::string& name_or_path);

}  // namespace mavswarm
