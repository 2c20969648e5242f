#pragma once

#include <vector>

#include "mavswarm/avoidance.hpp"
#include "mavswarm/dynamics.hpp"
#include "mavswarm/reference.hpp"
#include "mavswarm/types.hpp"

namespace mavswarm {

struct InputBounds {
  InputVec lower = InputVec(-0.6, -0.6, 4.0);
  InputVec upper = InputVec(0.6, 0.6, 18.0);
};

struct OcpConfig {
  double horizon = 2.0;
  int intervals = 20;
  StateMat state_weight = StateMat::Zero();
  InputMat input_weight = InputMat::Zero();
  StateMat terminal_weight = StateMat::Zero();
  InputBounds bounds;

  double step() const { return horizon / intervals; }
  void validate() const;

  /// Default tuning; terminal weight is `terminal_scale` times the state weight.
  static OcpConfig defaults(double terminal_scale = 10.0);
};

struct NodeReference {
  StateVec state = StateVec::Zero();
  InputVec input = InputVec::Zero();
  double yaw_rate = 0.0;
};

/// One avoided agent at one shooting node.
struct NodeObstacle {
  Vec3 position = Vec3::Zero();
  double r_min = 0.0;
  double r_th = 0.0;
  double weight = 0.0;
  double kappa = 1.0;
};

struct OcpProblem {
  StateVec x0 = StateVec::Zero();
  Vec3 f_ext = Vec3::Zero();
  ModelParams model;
  OcpConfig config;
  std::vector<NodeReference> refs;                    // N+1
  std::vector<std::vector<NodeObstacle>> obstacles;   // N+1, each one entry per avoided agent
  std::vector<int> obstacle_ids;

  int intervals() const { return config.intervals; }
};

/// Logistic collision cost Q_c / (1 + exp(kappa (d - r_th))).
double collision_cost(double distance, double r_th, double weight, double kappa);

struct CollisionTerm {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();  // w.r.t. own position
  Mat3 hessian = Mat3::Zero();   // PSD projection
};

/// Beyond this many 1/kappa past r_th the term is dropped outright.
inline constexpr double kCollisionCutoff = 30.0;

CollisionTerm collision_term(const Vec3& p, const NodeObstacle& obstacle);

/// Cost value with its Gauss-Newton gradient / Hessian in (x, u).
struct QuadraticModel {
  double value = 0.0;
  StateVec grad_x = StateVec::Zero();
  StateMat hess_x = StateMat::Zero();
  InputVec grad_u = InputVec::Zero();
  InputMat hess_u = InputMat::Zero();
};

/// J_x + J_u + J_c at one node (integrand, not scaled by the grid step).
QuadraticModel stage_cost(const StateVec& x, const InputVec& u, const NodeReference& ref,
                          const std::vector<NodeObstacle>& obstacles, const OcpConfig& config);

/// State tracking plus collision only (terminal node has no input).
QuadraticModel state_cost(const StateVec& x, const NodeReference& ref,
                          const std::vector<NodeObstacle>& obstacles, const StateMat& weight);

QuadraticModel terminal_cost(const StateVec& x, const StateVec& x_ref, const StateMat& weight);

/// Hover-consistent input for a desired acceleration and heading (drag ignored).
/// Throws std::invalid_argument when the specific force vanishes.
InputVec input_reference(const Vec3& accel, double yaw, double gravity, double roll_gain = 1.0,
                         double pitch_gain = 1.0);

/// Attitude (roll, pitch) that points the thrust along accel + g e_z.
std::pair<double, double> attitude_for_acceleration(const Vec3& accel, double yaw, double gravity);

struct AssemblyInput {
  StateVec x0 = StateVec::Zero();
  double now = 0.0;            // own clock, used for message ages
  double reference_time = 0.0; // time at which node 0 samples the reference
  Vec3 f_ext = Vec3::Zero();
  ModelParams model;
  OcpConfig config;
  CollisionParams collision;
  bool compensate_delay = true;
  const ReferenceTrajectory* reference = nullptr;
  std::vector<AgentBelief> beliefs;       // already filtered by the priority graph
  std::vector<StateMat> self_covariance;  // N+1; empty means zero
};

struct AssemblyReport {
  int clamped_delays = 0;
};

/// Grid-weighted cost model of node k: h * stage for k < N, terminal plus
/// h * collision at k == N (where `u` is ignored).
QuadraticModel node_cost(const OcpProblem& problem, int k, const StateVec& x, const InputVec& u);

/// Objective of the NLP at (X, U): grid-step weighted stages plus terminal.
double objective(const OcpProblem& problem, const std::vector<StateVec>& states,
                 const std::vector<InputVec>& inputs);

OcpProblem assemble(const AssemblyInput& in, AssemblyReport* report = nullptr);

}  // namespace mavswarm
