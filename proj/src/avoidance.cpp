#include "mavswarm/avoidance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mavswarm {

namespace {

constexpr double kCoincident = 1e-9;
constexpr double kHeadOnAngle = 1e-6;
constexpr double kHeadOnOffset = 1e-3;

void require_psd(const Mat6& s) {
  if (!s.allFinite()) throw std::invalid_argument("covariance is not finite");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument("covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat6> eig(s, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale)
    throw std::invalid_argument("covariance is not positive semidefinite");
}

}  // namespace

void CollisionParams::validate() const {
  if (!(r_min > 0) || !(r_min < r_th))
    throw std::invalid_argument("collision radii must satisfy 0 < r_min < r_th");
  if (!(kappa > 0)) throw std::invalid_argument("collision kappa must be positive");
  if (!(weight > 0)) throw std::invalid_argument("collision weight must be positive");
  if (!(velocity_threshold >= 0)) throw std::invalid_argument("velocity threshold must be >= 0");
  if (!(process_noise >= 0)) throw std::invalid_argument("process noise must be >= 0");
}

AgentPrediction predict_agent(const AgentBelief& belief, double now, std::span<const double> times,
                              double velocity_threshold, bool compensate_delay) {
  AgentPrediction out;
  double delay = now - belief.stamp;
  if (delay < 0) {
    out.clamped = true;
    delay = 0;
  }
  if (!compensate_delay) delay = 0;
  out.delay = delay;

  const Vec3 vel = belief.velocity.norm() >= velocity_threshold ? belief.velocity : Vec3::Zero();
  out.positions.reserve(times.size());
  for (double t : times) out.positions.push_back(belief.position + vel * (t - now + delay));
  return out;
}

Mat6 propagate_covariance_cv(const Mat6& sigma0, double dt, double process_noise) {
  require_psd(sigma0);
  if (dt < 0) throw std::invalid_argument("propagate_covariance_cv: dt must be >= 0");
  const Mat3 pp = sigma0.block<3, 3>(0, 0);
  const Mat3 pv = sigma0.block<3, 3>(0, 3);
  const Mat3 vp = sigma0.block<3, 3>(3, 0);
  const Mat3 vv = sigma0.block<3, 3>(3, 3);
  const Mat3 eye = Mat3::Identity();
  const double q = process_noise;

  Mat6 out;
  out.block<3, 3>(0, 0) = pp + dt * (pv + vp) + dt * dt * vv + (q * dt * dt * dt / 3.0) * eye;
  out.block<3, 3>(0, 3) = pv + dt * vv + (q * dt * dt / 2.0) * eye;
  out.block<3, 3>(3, 0) = vp + dt * vv + (q * dt * dt / 2.0) * eye;
  out.block<3, 3>(3, 3) = vv + (q * dt) * eye;
  return out;
}

std::vector<StateMat> propagate_covariance_self(const StateMat& sigma0,
                                                std::span<const StateVec> states,
                                                std::span<const InputVec> inputs,
                                                const Vec3& f_ext, const ModelParams& prm,
                                                double step, std::span<const double> yaw_rates) {
  std::vector<StateMat> out;
  out.reserve(states.size());
  if (states.empty()) return out;
  out.push_back(sigma0);
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    const double yaw_rate = k < yaw_rates.size() ? yaw_rates[k] : 0.0;
    const auto rk = integrate_rk4_sensitivity(states[k], inputs[k], f_ext, prm, step, yaw_rate);
    StateMat next = rk.dx * out.back() * rk.dx.transpose();
    out.push_back(0.5 * (next + next.transpose()));
  }
  return out;
}

double position_sigma(const Eigen::Ref<const Eigen::MatrixXd>& covariance) {
  const Mat3 block = covariance.block<3, 3>(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat3> eig;
  eig.computeDirect(0.5 * (block + block.transpose()), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

InflatedRadii inflate_radii(double sigma_self, double sigma_other, const CollisionParams& params) {
  const double inflation = 3.0 * sigma_self + 3.0 * sigma_other;
  return {params.r_min + inflation, params.r_th + inflation};
}

InflatedRadii inflate_radii(const StateMat& sigma_self, const Mat6& sigma_other,
                            const CollisionParams& params) {
  return inflate_radii(position_sigma(sigma_self), position_sigma(sigma_other), params);
}

Vec3 separation_direction(const Vec3& p, const Vec3& other) {
  const Vec3 diff = p - other;
  const double d = diff.norm();
  if (d < kCoincident) return Vec3::UnitX();
  return diff / d;
}

ConstraintValue collision_constraint(const Vec3& p, const Vec3& p_other, double r_min) {
  const Vec3 diff = p - p_other;
  ConstraintValue c;
  c.value = r_min * r_min - diff.squaredNorm();
  c.gradient = -2.0 * diff;
  return c;
}

Vec3 head_on_offset(const Vec3& own_p, const Vec3& own_v, const Vec3& other_p, const Vec3& other_v) {
  const Vec3 rel_p = other_p - own_p;
  const Vec3 rel_v = other_v - own_v;
  const double np = rel_p.norm();
  const double nv = rel_v.norm();
  if (np < kCoincident || nv < kCoincident) return Vec3::Zero();
  if (rel_p.dot(rel_v) > -std::cos(kHeadOnAngle) * np * nv) return Vec3::Zero();
  Vec3 lateral = Vec3::UnitZ().cross(rel_p / np);
  if (lateral.norm() < 1e-6) lateral = Vec3::UnitX();
  return kHeadOnOffset * lateral.normalized();
}

}  // namespace mavswarm
