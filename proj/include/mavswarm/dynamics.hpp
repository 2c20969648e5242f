#pragma once

#include "mavswarm/types.hpp"

namespace mavswarm {

/// Controller-level MAV parameters. Thrust is mass-normalized, so `mass`
/// only scales the external force.
struct ModelParams {
  double mass = 1.5;
  double gravity = 9.81;
  double drag = 0.01;  // lumped rotor-plane drag k_D, all rotors folded in
  double roll_gain = 1.0;
  double pitch_gain = 1.0;
  double roll_tau = 0.2;
  double pitch_tau = 0.2;

  /// Throws std::invalid_argument when a parameter is out of range.
  void validate() const;
};

/// R_IB for ZYX Euler angles: R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rotation_matrix(double roll, double pitch, double yaw);

/// Throws ModelDomainError if `x` is non-finite or |roll|, |pitch| >= pi/2.
void check_envelope(const StateVec& x);

/// xdot = f(x, u). `yaw_rate` is the exogenous heading rate from the reference.
StateVec continuous_dynamics(const StateVec& x, const InputVec& u, const Vec3& f_ext,
                             const ModelParams& prm, double yaw_rate = 0.0);

struct DynamicsJacobians {
  StateMat dfdx;
  StateInputMat dfdu;
};

/// Analytic Jacobians of continuous_dynamics.
DynamicsJacobians dynamics_jacobians(const StateVec& x, const InputVec& u, const Vec3& f_ext,
                                     const ModelParams& prm, double yaw_rate = 0.0);

/// One classical explicit RK4 step with `u` held constant over `h`.
StateVec integrate_rk4(const StateVec& x, const InputVec& u, const Vec3& f_ext,
                       const ModelParams& prm, double h, double yaw_rate = 0.0);

struct Rk4Step {
  StateVec next;
  StateMat dx;       // d next / d x
  StateInputMat du;  // d next / d u
};

/// RK4 step together with the exact derivative of the discrete map.
Rk4Step integrate_rk4_sensitivity(const StateVec& x, const InputVec& u, const Vec3& f_ext,
                                  const ModelParams& prm, double h, double yaw_rate = 0.0);

}  // namespace mavswarm
