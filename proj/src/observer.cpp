#include "mavswarm/observer.hpp"

#include <stdexcept>

namespace mavswarm {

DisturbanceEstimate initial_estimate(const ObserverParams& params) {
  DisturbanceEstimate e;
  e.joint = Eigen::Vector2d(params.initial_velocity_variance, params.initial_variance).asDiagonal();
  return e;
}

DisturbanceEstimate observer_update(const DisturbanceEstimate& prev, const Vec3& measured_velocity,
                                    const Vec3& model_increment, double dt, double mass,
                                    const ObserverParams& params) {
  if (!(dt > 0)) throw std::invalid_argument("observer_update: dt must be positive");
  if (!(mass > 0)) throw std::invalid_argument("observer_update: mass must be positive");
  const double g = dt / mass;

  Eigen::Matrix2d a;
  a << 1.0, g, 0.0, 1.0;
  Eigen::Matrix2d p = a * prev.joint * a.transpose();
  p(1, 1) += params.process_noise * dt;

  const Vec3 v_pred = prev.velocity + model_increment + g * prev.force;
  const Vec3 innovation = measured_velocity - v_pred;
  const double s = p(0, 0) + params.measurement_variance;
  const Eigen::Vector2d k = p.col(0) / s;

  DisturbanceEstimate next;
  next.velocity = v_pred + k(0) * innovation;
  next.force = prev.force + k(1) * innovation;
  // Joseph form keeps the covariance positive definite.
  Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity();
  ikh.col(0) -= k;
  const Eigen::Matrix2d joseph =
      ikh * p * ikh.transpose() + params.measurement_variance * k * k.transpose();
  next.joint = 0.5 * (joseph + joseph.transpose());
  return next;
}

}  // namespace mavswarm
