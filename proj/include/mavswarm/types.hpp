#pragma once

#include <Eigen/Dense>

namespace mavswarm {

inline constexpr int kStateDim = 9;
inline constexpr int kInputDim = 3;

// State layout: [p(3), v(3), roll, pitch, yaw].
namespace idx {
inline constexpr int kPos = 0;
inline constexpr int kVel = 3;
inline constexpr int kRoll = 6;
inline constexpr int kPitch = 7;
inline constexpr int kYaw = 8;

// Input layout: [roll_cmd, pitch_cmd, thrust].
inline constexpr int kRollCmd = 0;
inline constexpr int kPitchCmd = 1;
inline constexpr int kThrust = 2;
}  // namespace idx

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using InputVec = Eigen::Matrix<double, kInputDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, kStateDim>;
using StateInputMat = Eigen::Matrix<double, kStateDim, kInputDim>;
using InputMat = Eigen::Matrix<double, kInputDim, kInputDim>;

/// Controller state of one vehicle, inertial frame, ZYX Euler angles.
struct MavState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  StateVec vector() const {
    StateVec x;
    x << position, velocity, roll, pitch, yaw;
    return x;
  }

  static MavState from_vector(const StateVec& x) {
    MavState s;
    s.position = x.segment<3>(idx::kPos);
    s.velocity = x.segment<3>(idx::kVel);
    s.roll = x(idx::kRoll);
    s.pitch = x(idx::kPitch);
    s.yaw = x(idx::kYaw);
    return s;
  }
};

struct ControlInput {
  double roll_cmd = 0.0;
  double pitch_cmd = 0.0;
  double thrust = 0.0;  // mass-normalized, m/s^2

  InputVec vector() const { return InputVec(roll_cmd, pitch_cmd, thrust); }
  static ControlInput from_vector(const InputVec& u) { return {u(0), u(1), u(2)}; }
};

}  // namespace mavswarm
