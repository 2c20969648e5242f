#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "mavswarm/scenario.hpp"

namespace mavswarm {

/// Snapshot broadcast by one agent; never modified after publishing.
struct BusMessage {
  int sender = 0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Mat6 covariance = Mat6::Zero();
  double stamp = 0.0;    // sender's clock at publication
  double arrival = 0.0;  // sim time at which it becomes visible
  int priority = 0;
};

/// avoids[a][b]: agent index a steers clear of agent index b.
struct PriorityGraph {
  std::vector<std::vector<bool>> avoids;
  bool reciprocal = true;

  int edges() const;
  std::vector<int> avoided_by(int agent) const;
};

/// All ranks equal gives the complete graph; otherwise each agent avoids the
/// agents with a strictly smaller rank. Throws std::invalid_argument on ties
/// in ranked mode.
PriorityGraph build_priority_graph(const std::vector<int>& ranks);

/// One row of the trajectory log (agent `agent` at tick time `t`).
struct LogRecord {
  double t = 0.0;
  int agent = 0;
  StateVec truth = StateVec::Zero();
  StateVec estimate = StateVec::Zero();
  InputVec input = InputVec::Zero();
  Vec3 force = Vec3::Zero();           // disturbance estimate used by the controller
  Vec3 reference = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  double kkt = 0.0;
  int iterations = 0;                 // QP iterations of this tick's step
  bool ok = true;                     // false: previous input held
  int slack = 0;                      // active slack rows
  int clamped = 0;                    // beliefs with a future stamp
  // Indexed by agent position in the scenario; NaN in the agent's own slot.
  std::vector<double> distance;
  std::vector<double> r_min;          // hard radius inflated with the true noise levels
  std::vector<double> r_th;
};

struct TimingRecord {
  double t = 0.0;
  int agent = 0;
  double solve_ms = 0.0;
};

class World {
 public:
  explicit World(ScenarioConfig config);
  ~World();
  World(World&&) noexcept;
  World& operator=(World&&) noexcept;

  /// One control tick for every agent, then the plants advance by dt.
  void step();

  double time() const;
  long ticks() const { return tick_; }
  bool finished() const;
  const ScenarioConfig& config() const { return config_; }
  const PriorityGraph& graph() const { return graph_; }
  const std::vector<LogRecord>& log() const { return log_; }
  const std::vector<TimingRecord>& timing() const { return timing_; }
  StateVec true_state(int index) const;

  /// Diagnostic hook, called with each assembled problem and its initial guess
  /// just before the SQP step. Must not alter the run.
  using SolveProbe = std::function<void(int index, const OcpProblem&, const SqpSolution& guess)>;
  void set_probe(SolveProbe probe) { probe_ = std::move(probe); }

 private:
  struct Agent;
  void deliver(double t);
  void control(Agent& a, int index, double t, std::vector<BusMessage>& outbox);
  void advance_plants(double t);

  ScenarioConfig config_;
  PriorityGraph graph_;
  std::vector<std::unique_ptr<Agent>> agents_;
  std::map<std::pair<int, int>, std::mt19937_64> links_;
  std::vector<LogRecord> log_;
  std::vector<TimingRecord> timing_;
  long tick_ = 0;
  long total_ticks_ = 0;
  SolveProbe probe_;
};

/// Advances by one tick; dt must equal the scenario's control period.
void step_world(World& world, double dt);

struct RunOutput {
  ScenarioConfig config;
  std::vector<int> ids;
  std::vector<LogRecord> log;
  std::vector<TimingRecord> timing;
};

RunOutput run_scenario(const ScenarioConfig& config);

/// Deterministic 64-bit stream seed derived from the run seed and a key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace mavswarm
