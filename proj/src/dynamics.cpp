#include "mavswarm/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mavswarm/errors.hpp"

namespace mavswarm {

namespace {

struct Elementary {
  Mat3 rx, ry, rz;     // elementary rotations
  Mat3 drx, dry, drz;  // their angle derivatives
};

Elementary elementary_rotations(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  Elementary e;
  e.rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  e.ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  e.rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  e.drx << 0, 0, 0, 0, -sr, -cr, 0, cr, -sr;
  e.dry << -sp, 0, cp, 0, 0, 0, -cp, 0, -sp;
  e.drz << -sy, -cy, 0, cy, -sy, 0, 0, 0, 0;
  return e;
}

Mat3 drag_matrix(double k) { return Vec3(k, k, 0.0).asDiagonal(); }

}  // namespace

void ModelParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("model parameter out of range: ") + what);
  };
  require(std::isfinite(mass) && mass > 0, "mass > 0");
  require(std::isfinite(gravity) && gravity > 0, "gravity > 0");
  require(std::isfinite(drag) && drag >= 0, "drag >= 0");
  require(std::isfinite(roll_gain) && roll_gain > 0, "roll_gain > 0");
  require(std::isfinite(pitch_gain) && pitch_gain > 0, "pitch_gain > 0");
  require(std::isfinite(roll_tau) && roll_tau > 0, "roll_tau > 0");
  require(std::isfinite(pitch_tau) && pitch_tau > 0, "pitch_tau > 0");
}

Mat3 rotation_matrix(double roll, double pitch, double yaw) {
  const auto e = elementary_rotations(roll, pitch, yaw);
  return e.rz * e.ry * e.rx;
}

void check_envelope(const StateVec& x) {
  if (!x.allFinite()) throw ModelDomainError("state is not finite");
  constexpr double kLimit = std::numbers::pi / 2.0;
  if (std::abs(x(idx::kRoll)) >= kLimit || std::abs(x(idx::kPitch)) >= kLimit) {
    throw ModelDomainError("attitude outside validity envelope (roll=" +
                           std::to_string(x(idx::kRoll)) +
                           ", pitch=" + std::to_string(x(idx::kPitch)) + ")");
  }
}

StateVec continuous_dynamics(const StateVec& x, const InputVec& u, const Vec3& f_ext,
                             const ModelParams& prm, double yaw_rate) {
  check_envelope(x);
  const Mat3 rot = rotation_matrix(x(idx::kRoll), x(idx::kPitch), x(idx::kYaw));
  const Vec3 v = x.segment<3>(idx::kVel);
  const double thrust = u(idx::kThrust);

  StateVec xdot;
  xdot.segment<3>(idx::kPos) = v;
  xdot.segment<3>(idx::kVel) = thrust * (rot.col(2) - rot * drag_matrix(prm.drag) * rot.transpose() * v) -
                               prm.gravity * Vec3::UnitZ() + f_ext / prm.mass;
  xdot(idx::kRoll) = (prm.roll_gain * u(idx::kRollCmd) - x(idx::kRoll)) / prm.roll_tau;
  xdot(idx::kPitch) = (prm.pitch_gain * u(idx::kPitchCmd) - x(idx::kPitch)) / prm.pitch_tau;
  xdot(idx::kYaw) = yaw_rate;
  return xdot;
}

DynamicsJacobians dynamics_jacobians(const StateVec& x, const InputVec& u, const Vec3& /*f_ext*/,
                                     const ModelParams& prm, double /*yaw_rate*/) {
  check_envelope(x);
  const auto e = elementary_rotations(x(idx::kRoll), x(idx::kPitch), x(idx::kYaw));
  const Mat3 rot = e.rz * e.ry * e.rx;
  const Mat3 drag = drag_matrix(prm.drag);
  const Vec3 v = x.segment<3>(idx::kVel);
  const double thrust = u(idx::kThrust);
  const Vec3 body_v = rot.transpose() * v;

  DynamicsJacobians jac;
  jac.dfdx.setZero();
  jac.dfdu.setZero();

  jac.dfdx.block<3, 3>(idx::kPos, idx::kVel).setIdentity();
  jac.dfdx.block<3, 3>(idx::kVel, idx::kVel) = -thrust * rot * drag * rot.transpose();

  const Mat3 d_rot[3] = {e.rz * e.ry * e.drx, e.rz * e.dry * e.rx, e.drz * e.ry * e.rx};
  for (int a = 0; a < 3; ++a) {
    const Mat3& dr = d_rot[a];
    jac.dfdx.block<3, 1>(idx::kVel, idx::kRoll + a) =
        thrust * (dr.col(2) - dr * drag * body_v - rot * drag * dr.transpose() * v);
  }
  jac.dfdx(idx::kRoll, idx::kRoll) = -1.0 / prm.roll_tau;
  jac.dfdx(idx::kPitch, idx::kPitch) = -1.0 / prm.pitch_tau;

  jac.dfdu.block<3, 1>(idx::kVel, idx::kThrust) = rot.col(2) - rot * drag * body_v;
  jac.dfdu(idx::kRoll, idx::kRollCmd) = prm.roll_gain / prm.roll_tau;
  jac.dfdu(idx::kPitch, idx::kPitchCmd) = prm.pitch_gain / prm.pitch_tau;
  return jac;
}

StateVec integrate_rk4(const StateVec& x, const InputVec& u, const Vec3& f_ext,
                       const ModelParams& prm, double h, double yaw_rate) {
  if (!(h > 0)) throw std::invalid_argument("integrate_rk4: step must be positive");
  const StateVec k1 = continuous_dynamics(x, u, f_ext, prm, yaw_rate);
  const StateVec k2 = continuous_dynamics(x + 0.5 * h * k1, u, f_ext, prm, yaw_rate);
  const StateVec k3 = continuous_dynamics(x + 0.5 * h * k2, u, f_ext, prm, yaw_rate);
  const StateVec k4 = continuous_dynamics(x + h * k3, u, f_ext, prm, yaw_rate);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Rk4Step integrate_rk4_sensitivity(const StateVec& x, const InputVec& u, const Vec3& f_ext,
                                  const ModelParams& prm, double h, double yaw_rate) {
  if (!(h > 0)) throw std::invalid_argument("integrate_rk4: step must be positive");
  const StateMat eye = StateMat::Identity();

  const StateVec k1 = continuous_dynamics(x, u, f_ext, prm, yaw_rate);
  const auto j1 = dynamics_jacobians(x, u, f_ext, prm, yaw_rate);
  const StateMat k1x = j1.dfdx;
  const StateInputMat k1u = j1.dfdu;

  const StateVec x2 = x + 0.5 * h * k1;
  const StateVec k2 = continuous_dynamics(x2, u, f_ext, prm, yaw_rate);
  const auto j2 = dynamics_jacobians(x2, u, f_ext, prm, yaw_rate);
  const StateMat k2x = j2.dfdx * (eye + 0.5 * h * k1x);
  const StateInputMat k2u = j2.dfdx * (0.5 * h * k1u) + j2.dfdu;

  const StateVec x3 = x + 0.5 * h * k2;
  const StateVec k3 = continuous_dynamics(x3, u, f_ext, prm, yaw_rate);
  const auto j3 = dynamics_jacobians(x3, u, f_ext, prm, yaw_rate);
  const StateMat k3x = j3.dfdx * (eye + 0.5 * h * k2x);
  const StateInputMat k3u = j3.dfdx * (0.5 * h * k2u) + j3.dfdu;

  const StateVec x4 = x + h * k3;
  const StateVec k4 = continuous_dynamics(x4, u, f_ext, prm, yaw_rate);
  const auto j4 = dynamics_jacobians(x4, u, f_ext, prm, yaw_rate);
  const StateMat k4x = j4.dfdx * (eye + h * k3x);
  const StateInputMat k4u = j4.dfdx * (h * k3u) + j4.dfdu;

  Rk4Step step;
  step.next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  step.dx = eye + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  step.du = (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  return step;
}

}  // namespace mavswarm
