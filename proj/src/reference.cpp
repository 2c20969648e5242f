#include "mavswarm/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mavswarm/ocp.hpp"

namespace mavswarm {

namespace {

ReferencePoint make_point(double t, const Vec3& p, const Vec3& v, const Vec3& a, double yaw,
                          double gravity) {
  ReferencePoint pt;
  pt.time = t;
  const auto [roll, pitch] = attitude_for_acceleration(a, yaw, gravity);
  pt.state << p, v, roll, pitch, yaw;
  pt.accel = a;
  return pt;
}

}  // namespace

ReferenceTrajectory::ReferenceTrajectory(std::vector<ReferencePoint> points)
    : points_(std::move(points)) {
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i].time > points_[i - 1].time))
      throw std::invalid_argument("reference timestamps must be strictly increasing");
  }
}

ReferencePoint ReferenceTrajectory::sample(double t) const {
  if (points_.empty()) throw std::invalid_argument("sampling an empty reference");
  if (t <= points_.front().time) {
    ReferencePoint p = points_.front();
    p.time = t;
    return p;
  }
  if (t >= points_.back().time) {
    ReferencePoint p = points_.back();
    p.time = t;
    return p;
  }
  const auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double v, const ReferencePoint& p) { return v < p.time; });
  const ReferencePoint& b = *it;
  const ReferencePoint& a = *(it - 1);
  const double w = (t - a.time) / (b.time - a.time);
  ReferencePoint out;
  out.time = t;
  out.state = (1.0 - w) * a.state + w * b.state;
  out.accel = (1.0 - w) * a.accel + w * b.accel;
  out.yaw_rate = (1.0 - w) * a.yaw_rate + w * b.yaw_rate;
  return out;
}

ReferenceTrajectory ReferenceTrajectory::hover(const Vec3& position, double yaw, double gravity) {
  return ReferenceTrajectory(
      {make_point(0.0, position, Vec3::Zero(), Vec3::Zero(), yaw, gravity)});
}

ReferenceTrajectory ReferenceTrajectory::min_jerk(const std::vector<Vec3>& waypoints,
                                                  const std::vector<double>& durations,
                                                  double t_start, double yaw, double gravity,
                                                  double sample_dt) {
  if (waypoints.size() < 2) throw std::invalid_argument("min_jerk needs at least two waypoints");
  if (durations.size() + 1 != waypoints.size())
    throw std::invalid_argument("min_jerk needs one duration per segment");
  if (!(sample_dt > 0)) throw std::invalid_argument("min_jerk sample step must be positive");

  std::vector<ReferencePoint> pts;
  pts.push_back(make_point(t_start, waypoints.front(), Vec3::Zero(), Vec3::Zero(), yaw, gravity));
  double t0 = t_start;
  for (std::size_t s = 0; s < durations.size(); ++s) {
    const double dur = durations[s];
    if (!(dur > 0)) throw std::invalid_argument("min_jerk segment duration must be positive");
    const Vec3 delta = waypoints[s + 1] - waypoints[s];
    const int samples = std::max(1, static_cast<int>(std::ceil(dur / sample_dt)));
    for (int i = 1; i <= samples; ++i) {
      const double tau = static_cast<double>(i) / samples;
      const double t2 = tau * tau, t3 = t2 * tau, t4 = t3 * tau, t5 = t4 * tau;
      const double pos = 10 * t3 - 15 * t4 + 6 * t5;
      const double vel = (30 * t2 - 60 * t3 + 30 * t4) / dur;
      const double acc = (60 * tau - 180 * t2 + 120 * t3) / (dur * dur);
      pts.push_back(make_point(t0 + tau * dur, waypoints[s] + pos * delta, vel * delta,
                               acc * delta, yaw, gravity));
    }
    t0 += dur;
  }
  return ReferenceTrajectory(std::move(pts));
}

}  // namespace mavswarm
