#include "soatt/kinematics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace soatt {

namespace {

Mat2 wheel_map(const RobotParams& p) {
  const double k = 0.5 * p.wheel_radius;
  Mat2 t;
  t << k, k, k / p.half_axle, -k / p.half_axle;
  return t;
}

bool finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

}  // namespace

void RobotParams::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("robot params: " + what);
  };
  if (!(wheel_radius > 0.0)) fail("wheel_radius must be > 0");
  if (!(half_axle > 0.0)) fail("half_axle must be > 0");
  if (!(offset > 0.0)) fail("offset must be > 0");
  if (!(enclosing_radius > 0.0)) fail("enclosing_radius must be > 0");
  for (int k = 0; k < 2; ++k) {
    if (!(min_wheel_accel[k] < 0.0 && 0.0 < max_wheel_accel[k]))
      fail("wheel acceleration bounds must satisfy min < 0 < max");
  }
  if (!(max_point_accel > 0.0)) fail("max_point_accel must be > 0");
}

Mat2 jacobian(double heading, const RobotParams& params) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double d = params.offset;
  Mat2 rot;
  rot << c, -d * s, s, d * c;
  return rot * wheel_map(params);
}

Mat2 jacobian_dot(double heading, double heading_rate,
                  const RobotParams& params) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double d = params.offset;
  Mat2 drot;
  drot << -s, -d * c, c, -d * s;
  return (drot * wheel_map(params)) * heading_rate;
}

double heading_rate(const Vec2& wheel_velocity, const RobotParams& params) {
  return params.wheel_radius / (2.0 * params.half_axle) *
         (wheel_velocity.x() - wheel_velocity.y());
}

Vec2 point_velocity(const RobotState& state, const RobotParams& params) {
  return jacobian(state.heading, params) * state.wheel_velocity;
}

RobotState step_state(const RobotState& state, const Vec2& wheel_accel_cmd,
                      double dt, const RobotParams& params) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("step_state: dt must be positive and finite");
  if (!finite(state.position) || !std::isfinite(state.heading) ||
      !finite(state.wheel_velocity) || !finite(wheel_accel_cmd))
    throw std::invalid_argument("step_state: non-finite input");

  RobotState next = state;
  next.wheel_accel = wheel_accel_cmd;
  next.wheel_velocity = state.wheel_velocity + wheel_accel_cmd * dt;
  next.heading = state.heading + heading_rate(next.wheel_velocity, params) * dt;
  next.position = state.position +
                  jacobian(state.heading, params) * next.wheel_velocity * dt;
  return next;
}

}  // namespace soatt
