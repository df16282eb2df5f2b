#pragma once

#include <Eigen/Dense>

namespace soatt {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Physical parameters of one differential-drive robot.
///
/// The control point sits `offset` metres ahead of the axle centre, which
/// keeps the wheel-to-point Jacobian invertible.
struct RobotParams {
  // Normalized wheel: with r_w = 1 and b = d, A(theta) is a scaled rotation.
  double wheel_radius = 1.0;
  double half_axle = 0.3;
  double offset = 0.3;
  double enclosing_radius = 0.48;
  Vec2 max_wheel_accel{4.0, 4.0};    // rad/s^2
  Vec2 min_wheel_accel{-4.0, -4.0};  // rad/s^2
  double max_point_accel = 2.0;        // m/s^2, braking baseline only

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
};

struct RobotState {
  Vec2 position = Vec2::Zero();  // control point
  double heading = 0.0;
  Vec2 wheel_velocity = Vec2::Zero();
  Vec2 wheel_accel = Vec2::Zero();
};

// A(theta) = P(theta) * T, with p_dot = A(theta) * u.
Mat2 jacobian(double heading, const RobotParams& params);

// dA/dt = (dA/dtheta) * theta_dot.
Mat2 jacobian_dot(double heading, double heading_rate,
                  const RobotParams& params);

double heading_rate(const Vec2& wheel_velocity, const RobotParams& params);

Vec2 point_velocity(const RobotState& state, const RobotParams& params);

/// Semi-implicit Euler: wheels first, then heading, then position using the
/// pre-step heading and the post-step wheel velocities.
RobotState step_state(const RobotState& state, const Vec2& wheel_accel_cmd,
                      double dt, const RobotParams& params);

}  // namespace soatt
