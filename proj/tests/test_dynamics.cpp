#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "mavswarm/dynamics.hpp"
#include "mavswarm/errors.hpp"

using namespace mavswarm;

using namespace oracle;

TEST_CASE("rotation_matrix examples") {
  CHECK((rotation_matrix(0, 0, 0) - Mat3::Identity()).norm() == doctest::Approx(0.0));

  const Mat3 yaw90 = rotation_matrix(0, 0, std::numbers::pi / 2);
  CHECK((yaw90.col(0) - Vec3(0, 1, 0)).norm() < 1e-15);

  const Mat3 r = rotation_matrix(0.1, -0.2, 0.3);
  CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
  CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
  const Mat3 composed = (Eigen::AngleAxisd(0.3, Vec3::UnitZ()) * Eigen::AngleAxisd(-0.2, Vec3::UnitY()) *
                         Eigen::AngleAxisd(0.1, Vec3::UnitX()))
                            .toRotationMatrix();
  CHECK((r - composed).norm() < 1e-14);
}

TEST_CASE("rotation_matrix is orthonormal for arbitrary finite angles") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-20, 20);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = rotation_matrix(ang(rng), ang(rng), ang(rng));
    REQUIRE((r.transpose() * r - Mat3::Identity()).norm() < 1e-10);
    REQUIRE(std::abs(r.determinant() - 1.0) < 1e-10);
  }
}

TEST_CASE("continuous_dynamics examples") {
  const ModelParams prm;
  StateVec hover = StateVec::Zero();
  hover.head<3>() = Vec3(1, 2, 3);
  CHECK(continuous_dynamics(hover, InputVec(0, 0, prm.gravity), Vec3::Zero(), prm).norm() < 1e-15);

  const StateVec fall = continuous_dynamics(StateVec::Zero(), InputVec::Zero(), Vec3::Zero(), prm);
  CHECK((fall.segment<3>(idx::kVel) - Vec3(0, 0, -prm.gravity)).norm() < 1e-15);

  ModelParams drag = prm;
  drag.drag = 0.01;
  StateVec level = StateVec::Zero();
  level(idx::kVel) = 1.0;
  const InputVec u(0, 0, prm.gravity);
  const StateVec xdot = continuous_dynamics(level, u, Vec3::Zero(), drag);
  CHECK(xdot(idx::kVel) == doctest::Approx(-prm.gravity * 0.01 * 1.0).epsilon(1e-14));
  CHECK(xdot(idx::kVel + 2) == doctest::Approx(0.0));

  // Finite difference of a short rollout recovers the same deceleration.
  const double h = 1e-5;
  const StateVec later = integrate_rk4(level, u, Vec3::Zero(), drag, h);
  CHECK((later(idx::kVel) - 1.0) / h == doctest::Approx(-prm.gravity * 0.01).epsilon(1e-4));
}

TEST_CASE("continuous_dynamics rejects states outside the envelope") {
  const ModelParams prm;
  StateVec x = StateVec::Zero();
  x(idx::kRoll) = std::numbers::pi / 2;
  CHECK_THROWS_AS(continuous_dynamics(x, InputVec::Zero(), Vec3::Zero(), prm), ModelDomainError);
  x(idx::kRoll) = 0;
  x(idx::kPitch) = -1.6;
  CHECK_THROWS_AS(dynamics_jacobians(x, InputVec::Zero(), Vec3::Zero(), prm), ModelDomainError);
  x(idx::kPitch) = std::nan("");
  CHECK_THROWS_AS(integrate_rk4(x, InputVec::Zero(), Vec3::Zero(), prm, 0.01), ModelDomainError);
}

TEST_CASE("ModelParams validation") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  p.roll_tau = 0;
  CHECK_THROWS(p.validate());
  p = {};
  p.drag = -0.1;
  CHECK_THROWS(p.validate());
}

TEST_CASE("dynamics_jacobians at hover") {
  const ModelParams prm;
  const auto jac = dynamics_jacobians(StateVec::Zero(), InputVec(0, 0, prm.gravity), Vec3::Zero(), prm);
  CHECK((jac.dfdx.block<3, 3>(idx::kPos, idx::kVel) - Mat3::Identity()).norm() == 0.0);
  CHECK(jac.dfdx(idx::kRoll, idx::kRoll) == doctest::Approx(-1.0 / prm.roll_tau));
  CHECK(jac.dfdu(idx::kRoll, idx::kRollCmd) == doctest::Approx(prm.roll_gain / prm.roll_tau));
  CHECK(jac.dfdx(idx::kPitch, idx::kPitch) == doctest::Approx(-1.0 / prm.pitch_tau));
  CHECK(jac.dfdu(idx::kPitch, idx::kPitchCmd) == doctest::Approx(prm.pitch_gain / prm.pitch_tau));
}

TEST_CASE("dynamics_jacobians match central finite differences") {
  std::mt19937_64 rng(42);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_sample(rng);
    worst = std::max(worst, jacobian_fd_error(s, random_params(rng)));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("RK4 sensitivities match finite differences of the discrete map") {
  std::mt19937_64 rng(7);
  const double eps = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const auto s = random_sample(rng);
    const auto prm = random_params(rng);
    const double h = 0.1;
    const auto step = integrate_rk4_sensitivity(s.x, s.u, s.f, prm, h, 0.2);
    CHECK((step.next - integrate_rk4(s.x, s.u, s.f, prm, h, 0.2)).norm() == 0.0);
    StateMat ax;
    StateInputMat bu;
    for (int c = 0; c < kStateDim; ++c) {
      StateVec dx = StateVec::Zero();
      dx(c) = eps;
      ax.col(c) = (integrate_rk4(s.x + dx, s.u, s.f, prm, h, 0.2) -
                   integrate_rk4(s.x - dx, s.u, s.f, prm, h, 0.2)) / (2 * eps);
    }
    for (int c = 0; c < kInputDim; ++c) {
      InputVec du = InputVec::Zero();
      du(c) = eps;
      bu.col(c) = (integrate_rk4(s.x, s.u + du, s.f, prm, h, 0.2) -
                   integrate_rk4(s.x, s.u - du, s.f, prm, h, 0.2)) / (2 * eps);
    }
    REQUIRE(rel_error(step.dx, ax) < 1e-6);
    REQUIRE(rel_error(step.du, bu) < 1e-6);
  }
}

TEST_CASE("integrate_rk4 keeps hover fixed") {
  const ModelParams prm;
  StateVec x = StateVec::Zero();
  x.head<3>() = Vec3(-1, 4, 2);
  for (double h : {0.001, 0.1, 0.7}) {
    CHECK((integrate_rk4(x, InputVec(0, 0, prm.gravity), Vec3::Zero(), prm, h) - x).norm() < 1e-14);
  }
  CHECK_THROWS_AS(integrate_rk4(x, InputVec::Zero(), Vec3::Zero(), prm, 0.0), std::invalid_argument);
}

TEST_CASE("RK4 local error on the attitude lag is fifth order") {
  ModelParams prm;
  prm.roll_gain = 0.9;
  prm.roll_tau = 0.15;
  const double cmd = 0.4, phi0 = -0.2;
  auto local_error = [&](double h) {
    StateVec x = StateVec::Zero();
    x(idx::kRoll) = phi0;
    const StateVec next = integrate_rk4(x, InputVec(cmd, 0, prm.gravity), Vec3::Zero(), prm, h);
    const double ss = prm.roll_gain * cmd;
    const double exact = ss + (phi0 - ss) * std::exp(-h / prm.roll_tau);
    return std::abs(next(idx::kRoll) - exact);
  };
  const double ratio = local_error(0.02) / local_error(0.01);
  CHECK(std::log2(ratio) > 4.7);
  CHECK(std::log2(ratio) < 5.3);
}

TEST_CASE("RK4 global convergence order on a maneuvering rollout") {
  ModelParams prm;
  prm.drag = 0.05;
  StateVec x0;
  x0 << 0, 0, 1, 1.0, -0.5, 0.2, 0.3, -0.2, 0.4;
  const InputVec u(-0.3, 0.45, 11.0);
  const Vec3 f(0.4, -0.2, 0.1);
  const double t = 1.6;
  const StateVec ref = dense_rollout(x0, u, f, prm, t, 1e-4);
  std::vector<double> hs{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> errs;
  for (double h : hs) errs.push_back((dense_rollout(x0, u, f, prm, t, h) - ref).norm());

  CHECK(errs[0] / errs[1] == doctest::Approx(16.0).epsilon(0.2));
  CHECK(errs[1] / errs[2] == doctest::Approx(16.0).epsilon(0.1));

  CHECK(log_log_slope(hs, errs) >= 3.8);
}

TEST_CASE("horizontal speed is conserved without drag at level thrust") {
  ModelParams prm;
  prm.drag = 0.0;
  StateVec x = StateVec::Zero();
  x.segment<3>(idx::kVel) = Vec3(1.5, -0.7, 0);
  const double speed = x.segment<2>(idx::kVel).norm();
  for (int i = 0; i < 200; ++i) x = integrate_rk4(x, InputVec(0, 0, prm.gravity), Vec3::Zero(), prm, 0.05, 0.3);
  CHECK(x.segment<2>(idx::kVel).norm() == doctest::Approx(speed).epsilon(1e-12));
  const StateVec xdot = continuous_dynamics(x, InputVec(0, 0, prm.gravity), Vec3::Zero(), prm, 0.3);
  CHECK(std::abs(x.segment<2>(idx::kVel).dot(xdot.segment<2>(idx::kVel))) < 1e-12);
}
