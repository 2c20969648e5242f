#include "mavswarm/sqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mavswarm/errors.hpp"

namespace mavswarm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

InputVec clamp_input(const InputVec& u, const InputBounds& b) {
  return u.cwiseMax(b.lower).cwiseMin(b.upper);
}

double slack_penalty(const OcpProblem& problem, int obstacle, const SqpSettings& s) {
  return s.slack_penalty_factor * problem.obstacles[1][obstacle].weight;
}

void check_dimensions(const OcpProblem& problem, const SqpSolution& guess) {
  const int n = problem.intervals();
  if (static_cast<int>(guess.states.size()) != n + 1 || static_cast<int>(guess.inputs.size()) != n)
    throw std::invalid_argument("sqp guess does not match the shooting grid");
  if (static_cast<int>(problem.refs.size()) != n + 1)
    throw std::invalid_argument("ocp problem needs N+1 node references");
}

struct Rollout {
  std::vector<StateVec> next;  // Phi(x_k, u_k)
};

Rollout rollout(const OcpProblem& problem, const std::vector<StateVec>& states,
                const std::vector<InputVec>& inputs) {
  const double h = problem.config.step();
  Rollout r;
  r.next.reserve(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    r.next.push_back(integrate_rk4(states[k], inputs[k], problem.f_ext, problem.model, h,
                                   problem.refs[k].yaw_rate));
  }
  return r;
}

}  // namespace

double merit(const OcpProblem& problem, const std::vector<StateVec>& states,
             const std::vector<InputVec>& inputs, const SqpSettings& settings) {
  const auto next = rollout(problem, states, inputs).next;
  double defect = (states[0] - problem.x0).lpNorm<1>();
  for (std::size_t k = 0; k < next.size(); ++k) defect += (next[k] - states[k + 1]).lpNorm<1>();

  double violation = 0.0;
  for (std::size_t k = 1; k < problem.obstacles.size(); ++k) {
    for (std::size_t j = 0; j < problem.obstacles[k].size(); ++j) {
      const auto& ob = problem.obstacles[k][j];
      const auto g = collision_constraint(states[k].segment<3>(idx::kPos), ob.position, ob.r_min);
      violation += slack_penalty(problem, static_cast<int>(j), settings) * std::max(0.0, g.value);
    }
  }
  return objective(problem, states, inputs) + settings.defect_penalty * defect + violation;
}

SqpSolution cold_start(const OcpProblem& problem) {
  const int n = problem.intervals();
  const double h = problem.config.step();
  SqpSolution s;
  s.states.reserve(n + 1);
  s.inputs.reserve(n);
  s.states.push_back(problem.x0);
  for (int k = 0; k < n; ++k) {
    s.inputs.push_back(clamp_input(problem.refs[k].input, problem.config.bounds));
    s.states.push_back(integrate_rk4(s.states.back(), s.inputs.back(), problem.f_ext, problem.model,
                                     h, problem.refs[k].yaw_rate));
  }
  s.multipliers.assign(n + 1, NodeMultipliers{});
  for (auto& m : s.multipliers) m.collision.assign(problem.obstacle_ids.size(), 0.0);
  s.cost = objective(problem, s.states, s.inputs);
  return s;
}

QpSubproblem linearize(const OcpProblem& problem, const SqpSolution& guess,
                       const SqpSettings& settings) {
  check_dimensions(problem, guess);
  const int n = problem.intervals();
  const int nu = kInputDim * n;
  const double h = problem.config.step();

  QpSubproblem sub;
  sub.input_vars = nu;
  sub.pin_defect = problem.x0 - guess.states[0];

  // Condensing: dX_k = G_k dU + e_k.
  sub.state_sens.assign(n + 1, Eigen::MatrixXd::Zero(kStateDim, nu));
  sub.state_offset.assign(n + 1, StateVec::Zero());
  sub.defects.resize(n);
  sub.state_offset[0] = sub.pin_defect;
  for (int k = 0; k < n; ++k) {
    const auto rk = integrate_rk4_sensitivity(guess.states[k], guess.inputs[k], problem.f_ext,
                                              problem.model, h, problem.refs[k].yaw_rate);
    sub.defects[k] = rk.next - guess.states[k + 1];
    sub.state_offset[k + 1] = rk.dx * sub.state_offset[k] + sub.defects[k];
    if (k > 0) {
      sub.state_sens[k + 1].leftCols(kInputDim * k).noalias() =
          rk.dx * sub.state_sens[k].leftCols(kInputDim * k);
    }
    sub.state_sens[k + 1].middleCols<kInputDim>(kInputDim * k) = rk.du;
  }

  // Collision rows near the hard radius.
  for (int k = 1; k <= n; ++k) {
    const Vec3 p = guess.states[k].segment<3>(idx::kPos);
    for (std::size_t j = 0; j < problem.obstacles[k].size(); ++j) {
      const auto& ob = problem.obstacles[k][j];
      if ((p - ob.position).norm() - ob.r_min < settings.constraint_margin)
        sub.rows.push_back({k, static_cast<int>(j)});
    }
  }
  sub.slack_vars = static_cast<int>(sub.rows.size());
  const int nz = nu + sub.slack_vars;

  DenseQp& qp = sub.qp;
  qp.resize(nz);
  for (int k = 0; k <= n; ++k) {
    const InputVec u = k < n ? guess.inputs[k] : InputVec::Zero();
    const auto cost = node_cost(problem, k, guess.states[k], u);
    if (k > 0) {
      const int cols = kInputDim * k;
      const auto g = sub.state_sens[k].leftCols(cols);
      const Eigen::MatrixXd hg = cost.hess_x * g;
      qp.hessian.topLeftCorner(cols, cols).noalias() += g.transpose() * hg;
      qp.gradient.head(cols).noalias() +=
          g.transpose() * (cost.hess_x * sub.state_offset[k] + cost.grad_x);
    }
    if (k < n) {
      qp.hessian.block<kInputDim, kInputDim>(kInputDim * k, kInputDim * k) += cost.hess_u;
      qp.gradient.segment<kInputDim>(kInputDim * k) += cost.grad_u;
      qp.lower.segment<kInputDim>(kInputDim * k) = problem.config.bounds.lower - guess.inputs[k];
      qp.upper.segment<kInputDim>(kInputDim * k) = problem.config.bounds.upper - guess.inputs[k];
    }
  }
  qp.hessian.topLeftCorner(nu, nu).diagonal().array() += settings.regularization;
  qp.hessian = 0.5 * (qp.hessian + qp.hessian.transpose()).eval();

  qp.ineq_matrix = Eigen::MatrixXd::Zero(sub.slack_vars, nz);
  qp.ineq_rhs = Eigen::VectorXd::Zero(sub.slack_vars);
  for (int r = 0; r < sub.slack_vars; ++r) {
    const auto [k, j] = sub.rows[r];
    const auto& ob = problem.obstacles[k][j];
    const auto c = collision_constraint(guess.states[k].segment<3>(idx::kPos), ob.position, ob.r_min);
    const int cols = kInputDim * k;
    qp.ineq_matrix.row(r).head(cols) =
        c.gradient.transpose() * sub.state_sens[k].topRows<3>().leftCols(cols);
    qp.ineq_matrix(r, nu + r) = -1.0;
    qp.ineq_rhs(r) = -c.value - c.gradient.dot(sub.state_offset[k].segment<3>(idx::kPos));
    qp.hessian(nu + r, nu + r) = settings.slack_curvature;
    qp.gradient(nu + r) = slack_penalty(problem, j, settings);
    qp.lower(nu + r) = 0.0;
  }
  return sub;
}

SqpSolution sqp_step(const OcpProblem& problem, const SqpSolution& guess,
                     const SqpSettings& settings) {
  const auto t_start = std::chrono::steady_clock::now();
  const int n = problem.intervals();

  QpSubproblem sub = linearize(problem, guess, settings);
  const int nu = sub.input_vars;

  QpResult qp_res = solve_qp(sub.qp, settings.qp);
  double reg = settings.regularization;
  for (int attempt = 0; !qp_res.ok() && attempt < settings.max_regularization_increases;
       ++attempt) {
    const double bump = reg * 9.0;  // reg -> 10 reg
    reg *= 10.0;
    sub.qp.hessian.topLeftCorner(nu, nu).diagonal().array() += bump;
    qp_res = solve_qp(sub.qp, settings.qp);
  }

  SqpSolution out = guess;
  out.iterations = guess.iterations + 1;
  out.qp_iterations = qp_res.iterations;
  out.qp_ok = qp_res.ok();
  out.collision_rows = sub.slack_vars;

  const Eigen::VectorXd du = qp_res.z.head(nu);
  std::vector<StateVec> dx(n + 1);
  for (int k = 0; k <= n; ++k) dx[k] = sub.state_sens[k] * du + sub.state_offset[k];

  double step_norm = du.cwiseAbs().maxCoeff();
  for (const auto& v : dx) step_norm = std::max(step_norm, v.cwiseAbs().maxCoeff());
  out.step_norm = step_norm;

  out.slack_activations = 0;
  for (int r = 0; r < sub.slack_vars; ++r) {
    if (qp_res.z(nu + r) > settings.slack_activation_tol) ++out.slack_activations;
  }

  // Line search on the cost of the simulated trajectory, so every accepted
  // iterate is dynamically consistent from x0.
  auto simulate = [&](const std::vector<InputVec>& inputs, std::vector<StateVec>& states) {
    states[0] = problem.x0;
    for (int k = 0; k < n; ++k) {
      states[k + 1] = integrate_rk4(states[k], inputs[k], problem.f_ext, problem.model,
                                    problem.config.step(), problem.refs[k].yaw_rate);
      check_envelope(states[k + 1]);
    }
  };
  std::vector<StateVec> xs(n + 1);
  std::vector<InputVec> us(n);
  double merit0 = kInf;
  try {
    simulate(guess.inputs, xs);
    merit0 = merit(problem, xs, guess.inputs, settings);
  } catch (const ModelDomainError&) {
  }
  double alpha = 1.0;
  for (int halving = 0;; ++halving) {
    for (int k = 0; k < n; ++k) us[k] = guess.inputs[k] + alpha * du.segment<kInputDim>(kInputDim * k);
    bool valid = true;
    double m = kInf;
    try {
      simulate(us, xs);
      m = merit(problem, xs, us, settings);
    } catch (const ModelDomainError&) {
      valid = false;
    }
    if ((valid && m <= merit0) || halving >= settings.max_halvings) {
      if (!valid) throw ModelDomainError("sqp step left the model envelope");
      break;
    }
    alpha *= 0.5;
  }
  out.states = xs;
  out.inputs = us;
  out.step_length = alpha;

  // Multipliers and first-order optimality at the linearization point.
  out.multipliers.assign(n + 1, NodeMultipliers{});
  for (auto& m : out.multipliers) m.collision.assign(problem.obstacle_ids.size(), 0.0);
  for (int k = 0; k < n; ++k) {
    out.multipliers[k].lower = qp_res.lower_dual.segment<kInputDim>(kInputDim * k);
    out.multipliers[k].upper = qp_res.upper_dual.segment<kInputDim>(kInputDim * k);
  }
  for (int r = 0; r < sub.slack_vars; ++r) {
    out.multipliers[sub.rows[r].node].collision[sub.rows[r].obstacle] = qp_res.ineq_dual(r);
  }

  Eigen::VectorXd grad = sub.qp.gradient;
  if (sub.slack_vars > 0) grad += sub.qp.ineq_matrix.transpose() * qp_res.ineq_dual;
  grad += qp_res.upper_dual - qp_res.lower_dual;
  double kkt = grad.cwiseAbs().maxCoeff();
  kkt = std::max(kkt, sub.pin_defect.cwiseAbs().maxCoeff());
  for (const auto& d : sub.defects) kkt = std::max(kkt, d.cwiseAbs().maxCoeff());
  out.kkt = kkt;

  out.cost = objective(problem, out.states, out.inputs);
  out.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

SqpSolution solve_to_convergence(const OcpProblem& problem, const SqpSolution& guess,
                                 const SqpSettings& settings, double tol, int max_iterations) {
  SqpSolution cur = guess;
  cur.iterations = 0;
  for (int i = 0; i < max_iterations; ++i) {
    cur = sqp_step(problem, cur, settings);
    if (cur.kkt <= tol && cur.step_norm <= tol) break;
  }
  return cur;
}

SqpSolution shift_warm_start(const SqpSolution& previous) { return shift_warm_start(previous, 1.0); }

SqpSolution shift_warm_start(const SqpSolution& previous, double fraction) {
  const int n = previous.intervals();
  if (n < 2) throw std::invalid_argument("shift_warm_start needs at least two intervals");
  const double f = std::clamp(fraction, 0.0, 1.0);
  SqpSolution out = previous;
  for (int k = 0; k < n; ++k)
    out.states[k] = (1.0 - f) * previous.states[k] + f * previous.states[k + 1];
  for (int k = 0; k < n; ++k) {
    const int nxt = std::min(k + 1, n - 1);
    out.inputs[k] = (1.0 - f) * previous.inputs[k] + f * previous.inputs[nxt];
  }
  const auto& pm = previous.multipliers;
  if (static_cast<int>(pm.size()) == n + 1) {
    for (int k = 0; k <= n; ++k) {
      const int nxt = std::min(k + 1, k < n ? n - 1 : n);
      const auto& a = pm[k];
      const auto& b = pm[nxt];
      auto& m = out.multipliers[k];
      m.lower = (1.0 - f) * a.lower + f * b.lower;
      m.upper = (1.0 - f) * a.upper + f * b.upper;
      if (a.collision.size() == b.collision.size()) {
        for (std::size_t j = 0; j < a.collision.size(); ++j)
          m.collision[j] = (1.0 - f) * a.collision[j] + f * b.collision[j];
      }
    }
  }
  out.iterations = 0;
  return out;
}

FullSpaceQp linearize_full_space(const OcpProblem& problem, const SqpSolution& guess,
                                 const SqpSettings& settings) {
  check_dimensions(problem, guess);
  const int n = problem.intervals();
  const double h = problem.config.step();
  const int nx = kStateDim * (n + 1);
  const int nu = kInputDim * n;

  std::vector<CollisionRow> rows;
  for (int k = 1; k <= n; ++k) {
    const Vec3 p = guess.states[k].segment<3>(idx::kPos);
    for (std::size_t j = 0; j < problem.obstacles[k].size(); ++j) {
      const auto& ob = problem.obstacles[k][j];
      if ((p - ob.position).norm() - ob.r_min < settings.constraint_margin)
        rows.push_back({k, static_cast<int>(j)});
    }
  }
  const int ns = static_cast<int>(rows.size());

  FullSpaceQp full;
  full.state_vars = nx;
  full.input_vars = nu;
  DenseQp& qp = full.qp;
  qp.resize(nx + nu + ns);
  qp.eq_matrix = Eigen::MatrixXd::Zero(nx, nx + nu + ns);
  qp.eq_rhs = Eigen::VectorXd::Zero(nx);

  qp.eq_matrix.block<kStateDim, kStateDim>(0, 0).setIdentity();
  qp.eq_rhs.head<kStateDim>() = problem.x0 - guess.states[0];
  for (int k = 0; k <= n; ++k) {
    const InputVec u = k < n ? guess.inputs[k] : InputVec::Zero();
    const auto cost = node_cost(problem, k, guess.states[k], u);
    qp.hessian.block<kStateDim, kStateDim>(kStateDim * k, kStateDim * k) = cost.hess_x;
    qp.gradient.segment<kStateDim>(kStateDim * k) = cost.grad_x;
    if (k < n) {
      const int iu = nx + kInputDim * k;
      qp.hessian.block<kInputDim, kInputDim>(iu, iu) = cost.hess_u;
      qp.hessian.block<kInputDim, kInputDim>(iu, iu).diagonal().array() += settings.regularization;
      qp.gradient.segment<kInputDim>(iu) = cost.grad_u;
      qp.lower.segment<kInputDim>(iu) = problem.config.bounds.lower - guess.inputs[k];
      qp.upper.segment<kInputDim>(iu) = problem.config.bounds.upper - guess.inputs[k];

      const auto rk = integrate_rk4_sensitivity(guess.states[k], guess.inputs[k], problem.f_ext,
                                                problem.model, h, problem.refs[k].yaw_rate);
      const int row = kStateDim * (k + 1);
      qp.eq_matrix.block<kStateDim, kStateDim>(row, kStateDim * (k + 1)).setIdentity();
      qp.eq_matrix.block<kStateDim, kStateDim>(row, kStateDim * k) = -rk.dx;
      qp.eq_matrix.block<kStateDim, kInputDim>(row, iu) = -rk.du;
      qp.eq_rhs.segment<kStateDim>(row) = rk.next - guess.states[k + 1];
    }
  }
  qp.ineq_matrix = Eigen::MatrixXd::Zero(ns, nx + nu + ns);
  qp.ineq_rhs = Eigen::VectorXd::Zero(ns);
  for (int r = 0; r < ns; ++r) {
    const auto [k, j] = rows[r];
    const auto& ob = problem.obstacles[k][j];
    const auto c = collision_constraint(guess.states[k].segment<3>(idx::kPos), ob.position, ob.r_min);
    qp.ineq_matrix.block<1, 3>(r, kStateDim * k + idx::kPos) = c.gradient.transpose();
    qp.ineq_matrix(r, nx + nu + r) = -1.0;
    qp.ineq_rhs(r) = -c.value;
    qp.hessian(nx + nu + r, nx + nu + r) = settings.slack_curvature;
    qp.gradient(nx + nu + r) = slack_penalty(problem, j, settings);
    qp.lower(nx + nu + r) = 0.0;
  }
  return full;
}

}  // namespace mavswarm
