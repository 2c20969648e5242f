#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mavswarm/dynamics.hpp"
#include "mavswarm/types.hpp"

namespace mavswarm {

/// Snapshot of another agent as received over the bus.
struct AgentBelief {
  int id = 0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Mat6 covariance = Mat6::Zero();  // over (p, v)
  double stamp = 0.0;              // sender clock, s
  int priority = 0;
};

struct CollisionParams {
  double r_min = 0.9;
  double r_th = 1.2;
  double weight = 100.0;  // Q_c
  double kappa = 8.0;     // 1/m
  double velocity_threshold = 0.05;
  double process_noise = 0.0;  // additive velocity noise rate, (m/s)^2/s

  void validate() const;
};

struct AgentPrediction {
  std::vector<Vec3> positions;
  double delay = 0.0;       // compensated delay actually used, s
  bool clamped = false;     // stamp was ahead of `now`
};

/// Constant-velocity prediction at absolute `times`, shifted by the message age.
/// With `compensate_delay` false the age is ignored.
AgentPrediction predict_agent(const AgentBelief& belief, double now, std::span<const double> times,
                              double velocity_threshold, bool compensate_delay = true);

/// Closed-form covariance of (p, v) under the constant-velocity model after `dt`.
Mat6 propagate_covariance_cv(const Mat6& sigma0, double dt, double process_noise = 0.0);

/// Discrete Lyapunov recursion Sigma_{k+1} = A_k Sigma_k A_k^T along a nominal
/// trajectory; returns states.size() covariances (node 0 is sigma0).
std::vector<StateMat> propagate_covariance_self(const StateMat& sigma0,
                                                std::span<const StateVec> states,
                                                std::span<const InputVec> inputs,
                                                const Vec3& f_ext, const ModelParams& prm,
                                                double step, std::span<const double> yaw_rates = {});

/// sqrt of the largest eigenvalue of the 3x3 position block.
double position_sigma(const Eigen::Ref<const Eigen::MatrixXd>& covariance);

struct InflatedRadii {
  double r_min;
  double r_th;
};

InflatedRadii inflate_radii(double sigma_self, double sigma_other, const CollisionParams& params);
InflatedRadii inflate_radii(const StateMat& sigma_self, const Mat6& sigma_other,
                            const CollisionParams& params);

struct ConstraintValue {
  double value;   // G_j = r^2 - |p - p_j|^2 ; <= 0 is safe
  Vec3 gradient;  // dG/dp
};

ConstraintValue collision_constraint(const Vec3& p, const Vec3& p_other, double r_min);

/// Lateral nudge applied to an obstacle on an exactly head-on course, else zero.
Vec3 head_on_offset(const Vec3& own_p, const Vec3& own_v, const Vec3& other_p, const Vec3& other_v);

/// Unit direction from `other` to `p`; world x when they coincide.
Vec3 separation_direction(const Vec3& p, const Vec3& other);

}  // namespace mavswarm
