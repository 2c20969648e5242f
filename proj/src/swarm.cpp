#include "mavswarm/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "mavswarm/errors.hpp"

namespace mavswarm {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kAgentStream = 1;
constexpr std::uint64_t kLinkStream = 2;

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix(splitmix(splitmix(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

int PriorityGraph::edges() const {
  int n = 0;
  for (const auto& row : avoids) n += static_cast<int>(std::count(row.begin(), row.end(), true));
  return n;
}

std::vector<int> PriorityGraph::avoided_by(int agent) const {
  std::vector<int> out;
  for (std::size_t b = 0; b < avoids[agent].size(); ++b) {
    if (avoids[agent][b]) out.push_back(static_cast<int>(b));
  }
  return out;
}

PriorityGraph build_priority_graph(const std::vector<int>& ranks) {
  const int n = static_cast<int>(ranks.size());
  PriorityGraph g;
  g.avoids.assign(n, std::vector<bool>(n, false));
  g.reciprocal = std::all_of(ranks.begin(), ranks.end(), [&](int r) { return r == ranks.front(); });
  if (!g.reciprocal && std::set<int>(ranks.begin(), ranks.end()).size() != ranks.size())
    throw std::invalid_argument("priority ranks must be distinct unless all are equal");
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b) g.avoids[a][b] = g.reciprocal || ranks[b] < ranks[a];
    }
  }
  return g;
}

struct World::Agent {
  AgentConfig cfg;
  ReferenceTrajectory reference;
  ModelParams plant;
  StateVec truth = StateVec::Zero();
  std::mt19937_64 rng;

  DisturbanceEstimate observer;
  StateVec prev_measurement = StateVec::Zero();
  InputVec input = InputVec::Zero();
  bool started = false;

  SqpSolution solution;
  bool have_solution = false;

  std::map<int, AgentBelief> beliefs;  // by sender index
  std::vector<BusMessage> inbox;
  Mat6 reported_covariance = Mat6::Zero();
  StateMat measurement_covariance = StateMat::Zero();
};

World::World(ScenarioConfig config) : config_(std::move(config)) {
  config_.validate();
  std::vector<int> ranks;
  for (const auto& a : config_.agents) ranks.push_back(a.rank);
  try {
    graph_ = build_priority_graph(ranks);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("agents", e.what());
  }

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (const auto& cfg : config_.agents) {
    auto a = std::make_unique<Agent>();
    a->cfg = cfg;
    try {
      a->reference = cfg.reference();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("agents." + std::to_string(cfg.id), e.what());
    }
    a->rng.seed(derive_seed(config_.seed, kAgentStream, static_cast<std::uint64_t>(cfg.id)));
    a->plant = cfg.model;
    a->plant.roll_tau *= 1.0 + config_.mismatch * unit(a->rng);
    a->plant.pitch_tau *= 1.0 + config_.mismatch * unit(a->rng);
    a->plant.drag *= 1.0 + config_.mismatch * unit(a->rng);
    a->truth.segment<3>(idx::kPos) = cfg.start();
    a->truth(idx::kYaw) = cfg.yaw;
    a->input = InputVec(0, 0, cfg.model.gravity);
    a->observer = initial_estimate(config_.observer);

    const double sp2 = cfg.sigma_position * cfg.sigma_position;
    const double sv2 = cfg.sigma_velocity * cfg.sigma_velocity;
    const double sa2 = cfg.sigma_attitude * cfg.sigma_attitude;
    a->reported_covariance.topLeftCorner<3, 3>() = sp2 * Mat3::Identity();
    a->reported_covariance.bottomRightCorner<3, 3>() = sv2 * Mat3::Identity();
    a->measurement_covariance.topLeftCorner<6, 6>() = a->reported_covariance;
    a->measurement_covariance.bottomRightCorner<3, 3>() = sa2 * Mat3::Identity();
    agents_.push_back(std::move(a));
  }
  for (std::size_t s = 0; s < agents_.size(); ++s) {
    for (std::size_t r = 0; r < agents_.size(); ++r) {
      if (s == r) continue;
      const auto sid = static_cast<std::uint64_t>(config_.agents[s].id);
      const auto rid = static_cast<std::uint64_t>(config_.agents[r].id);
      links_[{static_cast<int>(s), static_cast<int>(r)}].seed(
          derive_seed(config_.seed, kLinkStream, (sid << 32) | rid));
    }
  }
  total_ticks_ = static_cast<long>(std::floor(config_.duration * config_.control_rate + 1e-9));
}

World::~World() = default;
World::World(World&&) noexcept = default;
World& World::operator=(World&&) noexcept = default;

double World::time() const { return static_cast<double>(tick_) * config_.dt(); }

bool World::finished() const { return tick_ > total_ticks_; }

StateVec World::true_state(int index) const { return agents_.at(index)->truth; }

void World::deliver(double t) {
  // Messages become visible at their arrival time; a belief only moves forward in stamp.
  for (std::size_t r = 0; r < agents_.size(); ++r) {
    auto& a = *agents_[r];
    auto keep = a.inbox.begin();
    for (auto it = a.inbox.begin(); it != a.inbox.end(); ++it) {
      if (it->arrival <= t + 1e-9) {
        auto found = a.beliefs.find(it->sender);
        if (found == a.beliefs.end() || found->second.stamp < it->stamp) {
          AgentBelief b;
          b.id = config_.agents[it->sender].id;
          b.position = it->position;
          b.velocity = it->velocity;
          b.covariance = it->covariance;
          b.stamp = it->stamp;
          b.priority = it->priority;
          a.beliefs[it->sender] = b;
        }
      } else {
        *keep++ = *it;
      }
    }
    a.inbox.erase(keep, a.inbox.end());
  }
}

void World::control(Agent& a, int index, double t, std::vector<BusMessage>& outbox) {
  const double dt = config_.dt();
  const double clock = t + a.cfg.clock_skew;
  const ModelParams& nominal = a.cfg.model;

  std::normal_distribution<double> gauss(0.0, 1.0);
  StateVec meas = a.truth;
  for (int i = 0; i < 3; ++i) meas(idx::kPos + i) += a.cfg.sigma_position * gauss(a.rng);
  for (int i = 0; i < 3; ++i) meas(idx::kVel + i) += a.cfg.sigma_velocity * gauss(a.rng);
  for (int i = 0; i < 3; ++i) meas(idx::kRoll + i) += a.cfg.sigma_attitude * gauss(a.rng);

  const auto ref_now = a.reference.sample(clock);
  if (a.started) {
    const StateVec nominal_next = integrate_rk4(a.prev_measurement, a.input, Vec3::Zero(), nominal,
                                                dt, ref_now.yaw_rate);
    const Vec3 increment =
        nominal_next.segment<3>(idx::kVel) - a.prev_measurement.segment<3>(idx::kVel);
    a.observer = observer_update(a.observer, meas.segment<3>(idx::kVel), increment, dt,
                                 nominal.mass, config_.observer);
  } else {
    a.observer.velocity = meas.segment<3>(idx::kVel);
  }
  const Vec3 f_hat = config_.observer.enabled ? a.observer.force : Vec3::Zero();

  AssemblyInput in;
  in.x0 = meas;
  in.now = clock;
  in.reference_time = clock;
  in.f_ext = f_hat;
  in.model = nominal;
  in.config = config_.ocp;
  in.collision = config_.collision;
  in.compensate_delay = config_.compensate_delay;
  in.reference = &a.reference;
  for (int b : graph_.avoided_by(index)) {
    const auto it = a.beliefs.find(b);
    if (it != a.beliefs.end()) in.beliefs.push_back(it->second);
  }

  LogRecord rec;
  rec.t = t;
  rec.agent = a.cfg.id;
  rec.truth = a.truth;
  rec.estimate = meas;
  rec.force = f_hat;
  rec.reference = ref_now.state.segment<3>(idx::kPos);
  rec.goal = a.cfg.goal();

  bool ok = true;
  double solve_ms = 0.0;
  try {
    SqpSolution guess;
    if (a.have_solution) {
      guess = shift_warm_start(a.solution, dt / config_.ocp.step());
    } else {
      guess = cold_start(assemble(in));
    }
    std::vector<double> yaw_rates(config_.ocp.intervals);
    for (int k = 0; k < config_.ocp.intervals; ++k)
      yaw_rates[k] = a.reference.sample(clock + k * config_.ocp.step()).yaw_rate;
    in.self_covariance = propagate_covariance_self(a.measurement_covariance, guess.states,
                                                   guess.inputs, f_hat, nominal,
                                                   config_.ocp.step(), yaw_rates);
    AssemblyReport report;
    const OcpProblem problem = assemble(in, &report);
    rec.clamped = report.clamped_delays;
    if (probe_) probe_(index, problem, guess);
    SqpSolution sol = sqp_step(problem, guess, config_.sqp);
    solve_ms = sol.solve_ms;
    rec.kkt = sol.kkt;
    rec.iterations = sol.qp_iterations;
    rec.slack = sol.slack_activations;
    if (sol.qp_ok) {
      a.solution = std::move(sol);
      a.have_solution = true;
      a.input = a.solution.inputs.front();
    } else {
      ok = false;
      a.solution = guess;
      a.have_solution = true;
    }
  } catch (const ModelDomainError&) {
    ok = false;
  }
  rec.ok = ok;
  rec.input = a.input;

  const int n = static_cast<int>(agents_.size());
  rec.distance.assign(n, std::numeric_limits<double>::quiet_NaN());
  rec.r_min = rec.distance;
  rec.r_th = rec.distance;
  for (int j = 0; j < n; ++j) {
    if (j == index) continue;
    const auto& other = *agents_[j];
    rec.distance[j] =
        (a.truth.segment<3>(idx::kPos) - other.truth.segment<3>(idx::kPos)).norm();
    const auto radii = inflate_radii(a.cfg.sigma_position, other.cfg.sigma_position,
                                     config_.collision);
    rec.r_min[j] = radii.r_min;
    rec.r_th[j] = radii.r_th;
  }
  log_.push_back(std::move(rec));
  timing_.push_back({t, a.cfg.id, solve_ms});

  BusMessage msg;
  msg.sender = index;
  msg.position = meas.segment<3>(idx::kPos);
  msg.velocity = meas.segment<3>(idx::kVel);
  msg.covariance = a.reported_covariance;
  msg.stamp = clock;
  msg.priority = a.cfg.rank;
  outbox.push_back(msg);

  a.prev_measurement = meas;
  a.started = true;
}

void World::advance_plants(double t) {
  const double dt = config_.dt();
  const double h = dt / config_.plant_substeps;
  for (auto& ap : agents_) {
    auto& a = *ap;
    const InputVec u = a.input.cwiseMax(config_.ocp.bounds.lower).cwiseMin(config_.ocp.bounds.upper);
    for (int s = 0; s < config_.plant_substeps; ++s) {
      const double ts = t + s * h;
      const Vec3 wind = ts + 1e-12 >= a.cfg.wind_onset ? a.cfg.wind : Vec3::Zero();
      const double yaw_rate = a.reference.sample(ts + a.cfg.clock_skew).yaw_rate;
      a.truth = integrate_rk4(a.truth, u, wind, a.plant, h, yaw_rate);
    }
  }
}

void World::step() {
  if (finished()) throw std::logic_error("world already reached its duration");
  const double t = time();
  deliver(t);
  std::vector<BusMessage> outbox;
  for (std::size_t i = 0; i < agents_.size(); ++i) control(*agents_[i], static_cast<int>(i), t, outbox);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& msg : outbox) {
    for (std::size_t r = 0; r < agents_.size(); ++r) {
      if (static_cast<int>(r) == msg.sender) continue;
      auto& rng = links_.at({msg.sender, static_cast<int>(r)});
      // Always draw both numbers so drop and jitter settings do not shift each other's streams.
      const double drop = unit(rng);
      const double jitter = unit(rng);
      if (drop < config_.network.drop) continue;
      BusMessage m = msg;
      m.arrival = t + config_.network.delay + config_.network.jitter * jitter;
      agents_[r]->inbox.push_back(m);
    }
  }
  advance_plants(t);
  ++tick_;
}

void step_world(World& world, double dt) {
  if (std::abs(dt - world.config().dt()) > 1e-12)
    throw std::invalid_argument("step_world: dt must equal the control period");
  world.step();
}

RunOutput run_scenario(const ScenarioConfig& config) {
  World world(config);
  while (!world.finished()) world.step();
  RunOutput out;
  out.config = world.config();
  for (const auto& a : out.config.agents) out.ids.push_back(a.id);
  out.log = world.log();
  out.timing = world.timing();
  return out;
}

}  // namespace mavswarm
