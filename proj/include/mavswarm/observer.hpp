#pragma once

#include <Eigen/Dense>

#include "mavswarm/types.hpp"

namespace mavswarm {

/// Kalman filter on (velocity, external force) per axis; the force is a random walk.
struct ObserverParams {
  bool enabled = true;
  double process_noise = 0.01;          // force random-walk intensity, N^2/s
  double measurement_variance = 2.5e-5; // velocity measurement variance, (m/s)^2
  double initial_variance = 1.0;        // N^2
  double initial_velocity_variance = 1.0;
};

struct DisturbanceEstimate {
  Vec3 force = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Eigen::Matrix2d joint = Eigen::Matrix2d::Identity();  // (v, F) covariance, shared by all axes

  Mat3 covariance() const { return joint(1, 1) * Mat3::Identity(); }
};

DisturbanceEstimate initial_estimate(const ObserverParams& params);

/// `model_increment` is the velocity change the nominal model predicts over dt
/// without any external force. The innovation is the measured velocity minus
/// the filter's prediction v + increment + dt F / m.
DisturbanceEstimate observer_update(const DisturbanceEstimate& prev, const Vec3& measured_velocity,
                                    const Vec3& model_increment, double dt, double mass,
                                    const ObserverParams& params);

}  // namespace mavswarm
