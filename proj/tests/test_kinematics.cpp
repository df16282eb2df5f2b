#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "soatt/kinematics.hpp"

using namespace soatt;
using soatt::test::rel_err;

TEST_CASE("jacobian at zero heading") {
  const Mat2 a = jacobian(0.0, test::paper_example_params());
  CHECK(a(0, 0) == doctest::Approx(0.033).epsilon(1e-14));
  CHECK(a(0, 1) == doctest::Approx(0.033).epsilon(1e-14));
  CHECK(a(1, 0) == doctest::Approx(0.04125).epsilon(1e-14));
  CHECK(a(1, 1) == doctest::Approx(-0.04125).epsilon(1e-14));
}

TEST_CASE("jacobian at 45 degrees") {
  // numpy: P(pi/4) @ T
  const Mat2 a = jacobian(std::numbers::pi / 4, test::paper_example_params());
  CHECK(a(0, 0) == doctest::Approx(-0.00583363094478902).epsilon(1e-12));
  CHECK(a(0, 1) == doctest::Approx(0.05250267850310116).epsilon(1e-12));
  CHECK(a(1, 0) == doctest::Approx(0.05250267850310116).epsilon(1e-12));
  CHECK(a(1, 1) == doctest::Approx(-0.00583363094478902).epsilon(1e-12));
}

TEST_CASE("jacobian matches the hand-written product") {
  test::Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    RobotParams p;
    p.wheel_radius = rng.uniform(0.01, 2.0);
    p.half_axle = rng.uniform(0.05, 1.0);
    p.offset = rng.uniform(0.05, 1.0);
    const double th = rng.uniform(-10, 10);
    const Mat2 want = test::jacobian_by_hand(th, p.wheel_radius, p.half_axle, p.offset);
    CHECK((jacobian(th, p) - want).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("determinant does not depend on heading") {
  const RobotParams p = test::paper_example_params();
  const double want = p.offset * p.wheel_radius * p.wheel_radius / (2.0 * p.half_axle);
  test::Rng rng(11);
  for (int k = 0; k < 1000; ++k) {
    const double th = rng.uniform(-20, 20);
    CHECK(std::abs(std::abs(jacobian(th, p).determinant()) - want) < 1e-15);
  }
}

TEST_CASE("jacobian_dot closed forms") {
  const RobotParams p = test::paper_example_params();
  CHECK(jacobian_dot(1.3, 0.0, p).isZero(0.0));
  Mat2 dp0;
  dp0 << 0.0, -p.offset, 1.0, 0.0;
  Mat2 t;
  t << 1.0, 1.0, 1.0 / p.half_axle, -1.0 / p.half_axle;
  t *= 0.5 * p.wheel_radius;
  CHECK((jacobian_dot(0.0, 1.0, p) - dp0 * t).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("jacobian_dot matches central differences") {
  test::Rng rng(3);
  RobotParams p;
  for (int k = 0; k < 200; ++k) {
    const double th = rng.uniform(-5, 5);
    const double rate = rng.uniform(-3, 3);
    const double tau = 1e-6;
    const Mat2 fd = (jacobian(th + rate * tau, p) - jacobian(th - rate * tau, p)) / (2 * tau);
    const Mat2 an = jacobian_dot(th, rate, p);
    CHECK((fd - an).norm() / std::max(an.norm(), 1e-3) < 1e-6);
  }
}

TEST_CASE("step_state at rest is the identity") {
  RobotParams p;
  p.max_wheel_accel = Vec2::Zero();
  p.min_wheel_accel = Vec2::Zero();
  RobotState s;
  s.position = Vec2(1.5, -2.0);
  s.heading = 0.7;
  const RobotState next = step_state(s, Vec2::Zero(), 0.005, p);
  CHECK(next.position == s.position);
  CHECK(next.heading == s.heading);
}

TEST_CASE("equal wheel speeds drive straight along the heading") {
  RobotParams p = test::paper_example_params();
  RobotState s;
  s.heading = 0.4;
  s.wheel_velocity = Vec2(2.0, 2.0);
  const double dt = 0.005;
  const RobotState next = step_state(s, Vec2::Zero(), dt, p);
  CHECK(next.heading == s.heading);
  const Vec2 want = p.wheel_radius * 2.0 * dt * Vec2(std::cos(0.4), std::sin(0.4));
  CHECK((next.position - want).norm() < 1e-15);
}

TEST_CASE("step_state order: wheels, heading, then position with the old heading") {
  RobotParams p;
  RobotState s;
  s.heading = 0.2;
  s.wheel_velocity = Vec2(1.0, -0.5);
  const Vec2 cmd(2.0, -1.0);
  const double dt = 0.01;
  const RobotState next = step_state(s, cmd, dt, p);
  const Vec2 u = s.wheel_velocity + cmd * dt;
  CHECK((next.wheel_velocity - u).norm() < 1e-15);
  const double omega = p.wheel_radius / (2 * p.half_axle) * (u(0) - u(1));
  CHECK(next.heading == doctest::Approx(0.2 + omega * dt).epsilon(1e-15));
  const Vec2 pos = test::jacobian_by_hand(0.2, p.wheel_radius, p.half_axle, p.offset) * u * dt;
  CHECK((next.position - pos).norm() < 1e-15);
}

namespace {

// Fine explicit integration of p' = A(theta) u, theta' = w(u), u' = cmd.
Vec2 fine_reference(const RobotParams& p, const Vec2& cmd, double horizon) {
  const double h = 1e-5;
  const int steps = static_cast<int>(std::lround(horizon / h));
  Vec2 pos = Vec2::Zero(), u = Vec2::Zero();
  double th = 0.0;
  for (int k = 0; k < steps; ++k) {
    const Mat2 a = test::jacobian_by_hand(th, p.wheel_radius, p.half_axle, p.offset);
    pos += a * u * h;
    th += p.wheel_radius / (2 * p.half_axle) * (u(0) - u(1)) * h;
    u += cmd * h;
  }
  return pos;
}

Vec2 coarse(const RobotParams& p, const Vec2& cmd, double dt, double horizon) {
  RobotState s;
  const int steps = static_cast<int>(std::lround(horizon / dt));
  for (int k = 0; k < steps; ++k) s = step_state(s, cmd, dt, p);
  return s.position;
}

}  // namespace

TEST_CASE("constant command against a fine integration") {
  RobotParams p;
  const Vec2 cmd(1.0, 1.0);
  const Vec2 ref = fine_reference(p, cmd, 0.5);
  // Straight run: the sum dt^2 (1 + ... + N) overshoots T^2/2 by r_w T dt / 2.
  const double lead = p.wheel_radius * 0.5 * 0.005 / 2;
  CHECK((coarse(p, cmd, 0.005, 0.5) - ref).norm() == doctest::Approx(lead).epsilon(1e-2));
}

TEST_CASE("first-order convergence in dt") {
  RobotParams p;
  const Vec2 cmd(1.5, 0.5);  // turning, so heading errors matter
  const Vec2 ref = fine_reference(p, cmd, 1.0);
  const double e1 = (coarse(p, cmd, 0.01, 1.0) - ref).norm();
  const double e2 = (coarse(p, cmd, 0.005, 1.0) - ref).norm();
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("step_state rejects bad input") {
  RobotParams p;
  RobotState s;
  CHECK_THROWS_AS(step_state(s, Vec2(std::numeric_limits<double>::quiet_NaN(), 0), 0.005, p),
                  std::invalid_argument);
  CHECK_THROWS_AS(step_state(s, Vec2::Zero(), 0.0, p), std::invalid_argument);
  s.position(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(step_state(s, Vec2::Zero(), 0.005, p), std::invalid_argument);
}

TEST_CASE("RobotParams::validate") {
  RobotParams p;
  CHECK_NOTHROW(p.validate());
  RobotParams q = p;
  q.offset = 0.0;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  q = p;
  q.wheel_radius = -1.0;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  q = p;
  q.min_wheel_accel = Vec2(0.0, -1.0);
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}
