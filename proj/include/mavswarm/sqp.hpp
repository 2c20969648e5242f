#pragma once

#include <vector>

#include "mavswarm/ocp.hpp"
#include "mavswarm/qp.hpp"

namespace mavswarm {

struct SqpSettings {
  double slack_penalty_factor = 1e4;  // rho = factor * Q_c
  double slack_curvature = 1.0;       // keeps the QP Hessian definite in the slack block
  double regularization = 1e-8;       // multiplied by 10 after each QP failure
  int max_regularization_increases = 6;
  int max_halvings = 5;
  double constraint_margin = 0.5;     // a node/agent pair gets a row when d - r_min < margin
  double defect_penalty = 1e3;        // merit weight on continuity and pinning defects
  double slack_activation_tol = 1e-6;
  QpSettings qp;
};

struct NodeMultipliers {
  InputVec lower = InputVec::Zero();
  InputVec upper = InputVec::Zero();
  std::vector<double> collision;  // one per avoided agent
};

struct SqpSolution {
  std::vector<StateVec> states;              // N+1
  std::vector<InputVec> inputs;              // N
  std::vector<NodeMultipliers> multipliers;  // N+1 (input bounds unused at N)
  double kkt = 0.0;  // first-order residual at the linearization point
  double step_norm = 0.0;
  double step_length = 0.0;
  double cost = 0.0;
  int iterations = 0;
  int qp_iterations = 0;
  int slack_activations = 0;
  int collision_rows = 0;
  bool qp_ok = true;
  double solve_ms = 0.0;

  int intervals() const { return static_cast<int>(inputs.size()); }
};

struct CollisionRow {
  int node;
  int obstacle;
};

/// Condensed QP in z = [dU (3N), slacks], with dX_k = sens[k] dU + offset[k].
struct QpSubproblem {
  DenseQp qp;
  int input_vars = 0;
  int slack_vars = 0;
  std::vector<CollisionRow> rows;
  std::vector<Eigen::MatrixXd> state_sens;
  std::vector<StateVec> state_offset;
  std::vector<StateVec> defects;      // Phi(x_k, u_k) - x_{k+1}
  StateVec pin_defect = StateVec::Zero();  // x0 - guess.x_0
};

/// Rollout of the clamped reference inputs from x0.
SqpSolution cold_start(const OcpProblem& problem);

/// Throws ModelDomainError if the guess leaves the model envelope.
QpSubproblem linearize(const OcpProblem& problem, const SqpSolution& guess,
                       const SqpSettings& settings = {});

/// One Gauss-Newton SQP iteration. Candidate inputs are simulated from x0 and
/// the step is halved while the penalized cost of that rollout increases.
SqpSolution sqp_step(const OcpProblem& problem, const SqpSolution& guess,
                     const SqpSettings& settings = {});

/// Repeats sqp_step until kkt <= tol (or the iteration cap).
SqpSolution solve_to_convergence(const OcpProblem& problem, const SqpSolution& guess,
                                 const SqpSettings& settings = {}, double tol = 1e-6,
                                 int max_iterations = 50);

/// Drops the first interval and duplicates the last.
SqpSolution shift_warm_start(const SqpSolution& previous);

/// Shifts by `fraction` of one interval (fraction = 1 matches the overload above).
SqpSolution shift_warm_start(const SqpSolution& previous, double fraction);

/// Exact-penalty merit used by the line search.
double merit(const OcpProblem& problem, const std::vector<StateVec>& states,
             const std::vector<InputVec>& inputs, const SqpSettings& settings = {});

/// Uncondensed QP over [dX, dU, slacks] with explicit continuity equalities.
/// Diagnostic; the controller never builds it.
struct FullSpaceQp {
  DenseQp qp;
  int state_vars = 0;
  int input_vars = 0;
};
FullSpaceQp linearize_full_space(const OcpProblem& problem, const SqpSolution& guess,
                                 const SqpSettings& settings = {});

}  // namespace mavswarm
