#pragma once

#include <vector>

#include "mavswarm/types.hpp"

namespace mavswarm {

struct ReferencePoint {
  double time = 0.0;
  StateVec state = StateVec::Zero();
  Vec3 accel = Vec3::Zero();
  double yaw_rate = 0.0;
};

/// Time-stamped reference with linear interpolation between samples and
/// constant extrapolation past either end.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory() = default;
  /// Throws std::invalid_argument unless timestamps strictly increase.
  explicit ReferenceTrajectory(std::vector<ReferencePoint> points);

  ReferencePoint sample(double t) const;
  bool empty() const { return points_.empty(); }
  const std::vector<ReferencePoint>& points() const { return points_; }
  double start_time() const { return points_.front().time; }
  double end_time() const { return points_.back().time; }

  static ReferenceTrajectory hover(const Vec3& position, double yaw, double gravity);

  /// Rest-to-rest quintic (minimum-jerk) segments through `waypoints`,
  /// each lasting the matching entry of `durations`, starting at `t_start`.
  static ReferenceTrajectory min_jerk(const std::vector<Vec3>& waypoints,
                                      const std::vector<double>& durations, double t_start,
                                      double yaw, double gravity, double sample_dt = 0.01);

 private:
  std::vector<ReferencePoint> points_;
};

}  // namespace mavswarm
