#include "mavswarm/ocp.hpp"

#include <cmath>
#include <stdexcept>

namespace mavswarm {

namespace {

bool symmetric_psd(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -1e-12;
}

void add_collision(QuadraticModel& model, const Vec3& p, const std::vector<NodeObstacle>& obstacles,
                   double scale) {
  for (const auto& ob : obstacles) {
    const auto term = collision_term(p, ob);
    model.value += scale * term.value;
    model.grad_x.segment<3>(idx::kPos) += scale * term.gradient;
    model.hess_x.block<3, 3>(idx::kPos, idx::kPos) += scale * term.hessian;
  }
}

}  // namespace

void OcpConfig::validate() const {
  if (!(horizon > 0)) throw std::invalid_argument("ocp horizon must be positive");
  if (intervals < 2) throw std::invalid_argument("ocp needs at least two intervals");
  if (!symmetric_psd(state_weight)) throw std::invalid_argument("state weight must be symmetric PSD");
  if (!symmetric_psd(input_weight)) throw std::invalid_argument("input weight must be symmetric PSD");
  if (!symmetric_psd(terminal_weight))
    throw std::invalid_argument("terminal weight must be symmetric PSD");
  for (int i = 0; i < kInputDim; ++i) {
    if (!(bounds.lower(i) < bounds.upper(i)))
      throw std::invalid_argument("input bounds must satisfy min < max");
  }
}

OcpConfig OcpConfig::defaults(double terminal_scale) {
  OcpConfig c;
  StateVec q;
  q << 60, 60, 80, 15, 15, 15, 5, 5, 0;
  c.state_weight = q.asDiagonal();
  c.input_weight = InputVec(40, 40, 1).asDiagonal();
  c.terminal_weight = terminal_scale * c.state_weight;
  return c;
}

double collision_cost(double distance, double r_th, double weight, double kappa) {
  return weight / (1.0 + std::exp(kappa * (distance - r_th)));
}

CollisionTerm collision_term(const Vec3& p, const NodeObstacle& ob) {
  CollisionTerm term;
  const double d = (p - ob.position).norm();
  const double z = ob.kappa * (d - ob.r_th);
  if (z > kCollisionCutoff) return term;
  const double sig = 1.0 / (1.0 + std::exp(z));
  const Vec3 n = separation_direction(p, ob.position);
  const double d1 = -ob.weight * ob.kappa * sig * (1.0 - sig);
  const double d2 = ob.weight * ob.kappa * ob.kappa * sig * (1.0 - sig) * (1.0 - 2.0 * sig);
  term.value = ob.weight * sig;
  term.gradient = d1 * n;
  // The tangential curvature d1/d is never positive; only the radial part survives.
  if (d2 > 0) term.hessian = d2 * n * n.transpose();
  return term;
}

QuadraticModel state_cost(const StateVec& x, const NodeReference& ref,
                          const std::vector<NodeObstacle>& obstacles, const StateMat& weight) {
  QuadraticModel m;
  const StateVec e = x - ref.state;
  m.value = e.dot(weight * e);
  m.grad_x = 2.0 * weight * e;
  m.hess_x = 2.0 * weight;
  add_collision(m, x.segment<3>(idx::kPos), obstacles, 1.0);
  return m;
}

QuadraticModel stage_cost(const StateVec& x, const InputVec& u, const NodeReference& ref,
                          const std::vector<NodeObstacle>& obstacles, const OcpConfig& config) {
  QuadraticModel m = state_cost(x, ref, obstacles, config.state_weight);
  const InputVec du = u - ref.input;
  m.value += du.dot(config.input_weight * du);
  m.grad_u = 2.0 * config.input_weight * du;
  m.hess_u = 2.0 * config.input_weight;
  return m;
}

QuadraticModel terminal_cost(const StateVec& x, const StateVec& x_ref, const StateMat& weight) {
  QuadraticModel m;
  const StateVec e = x - x_ref;
  m.value = e.dot(weight * e);
  m.grad_x = 2.0 * weight * e;
  m.hess_x = 2.0 * weight;
  return m;
}

QuadraticModel node_cost(const OcpProblem& problem, int k, const StateVec& x, const InputVec& u) {
  const int n = problem.intervals();
  const double h = problem.config.step();
  static const std::vector<NodeObstacle> kNone;
  const auto& obs = k < static_cast<int>(problem.obstacles.size()) ? problem.obstacles[k] : kNone;
  if (k < n) {
    QuadraticModel m = stage_cost(x, u, problem.refs[k], obs, problem.config);
    m.value *= h;
    m.grad_x *= h;
    m.hess_x *= h;
    m.grad_u *= h;
    m.hess_u *= h;
    return m;
  }
  QuadraticModel m = terminal_cost(x, problem.refs[k].state, problem.config.terminal_weight);
  add_collision(m, x.segment<3>(idx::kPos), obs, h);
  return m;
}

double objective(const OcpProblem& problem, const std::vector<StateVec>& states,
                 const std::vector<InputVec>& inputs) {
  const int n = problem.intervals();
  double total = 0.0;
  for (int k = 0; k < n; ++k) total += node_cost(problem, k, states[k], inputs[k]).value;
  total += node_cost(problem, n, states[n], InputVec::Zero()).value;
  return total;
}

std::pair<double, double> attitude_for_acceleration(const Vec3& accel, double yaw, double gravity) {
  const Vec3 f = accel + gravity * Vec3::UnitZ();
  const double thrust = f.norm();
  if (!(thrust > 1e-9))
    throw std::invalid_argument("input reference undefined for a free-fall acceleration");
  // Express the specific force in the heading frame: R e_z T with R = Rz Ry Rx.
  const double c = std::cos(yaw), s = std::sin(yaw);
  const Vec3 fh(c * f.x() + s * f.y(), -s * f.x() + c * f.y(), f.z());
  const double pitch = std::atan2(fh.x(), fh.z());
  const double roll = std::atan2(-fh.y(), std::hypot(fh.x(), fh.z()));
  return {roll, pitch};
}

InputVec input_reference(const Vec3& accel, double yaw, double gravity, double roll_gain,
                         double pitch_gain) {
  const auto [roll, pitch] = attitude_for_acceleration(accel, yaw, gravity);
  const double thrust = (accel + gravity * Vec3::UnitZ()).norm();
  return InputVec(roll / roll_gain, pitch / pitch_gain, thrust);
}

OcpProblem assemble(const AssemblyInput& in, AssemblyReport* report) {
  if (in.reference == nullptr || in.reference->empty())
    throw std::invalid_argument("assemble: empty reference trajectory");
  in.config.validate();

  const int n = in.config.intervals;
  const double h = in.config.step();

  OcpProblem prob;
  prob.x0 = in.x0;
  prob.f_ext = in.f_ext;
  prob.model = in.model;
  prob.config = in.config;
  prob.refs.resize(n + 1);
  prob.obstacles.assign(n + 1, {});

  std::vector<double> own_times(n + 1);
  for (int k = 0; k <= n; ++k) {
    const auto r = in.reference->sample(in.reference_time + k * h);
    NodeReference& node = prob.refs[k];
    node.state = r.state;
    node.yaw_rate = r.yaw_rate;
    node.input = input_reference(r.accel, r.state(idx::kYaw), in.model.gravity, in.model.roll_gain,
                                 in.model.pitch_gain);
    own_times[k] = in.now + k * h;
  }

  const Vec3 own_p = in.x0.segment<3>(idx::kPos);
  const Vec3 own_v = in.x0.segment<3>(idx::kVel);
  for (const auto& belief : in.beliefs) {
    const auto pred = predict_agent(belief, in.now, own_times, in.collision.velocity_threshold,
                                    in.compensate_delay);
    if (pred.clamped && report) ++report->clamped_delays;
    const Vec3 eff_v = belief.velocity.norm() >= in.collision.velocity_threshold
                           ? belief.velocity
                           : Vec3::Zero();
    const Vec3 nudge = head_on_offset(own_p, own_v, pred.positions.front(), eff_v);
    prob.obstacle_ids.push_back(belief.id);
    for (int k = 0; k <= n; ++k) {
      const Mat6 cov = propagate_covariance_cv(belief.covariance, own_times[k] - in.now + pred.delay,
                                               in.collision.process_noise);
      const double sigma_self =
          in.self_covariance.empty() ? 0.0 : position_sigma(in.self_covariance[k]);
      const auto radii = inflate_radii(sigma_self, position_sigma(cov), in.collision);
      NodeObstacle ob;
      ob.position = pred.positions[k] + nudge;
      ob.r_min = radii.r_min;
      ob.r_th = radii.r_th;
      ob.weight = in.collision.weight;
      ob.kappa = in.collision.kappa;
      prob.obstacles[k].push_back(ob);
    }
  }
  return prob;
}

}  // namespace mavswarm
