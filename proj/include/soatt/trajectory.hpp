#pragma once

#include <string_view>

#include "soatt/tracking.hpp"

namespace soatt {

/// Analytic reference trajectory with exact velocity and acceleration.
struct Trajectory {
  enum class Kind {
    Line,    // start -> goal at constant speed, then hold at goal
    Sine,    // advance along `direction` while oscillating sideways
    Circle,  // constant angular speed around `center`
    Hold,    // stationary at `start`
  };

  Kind kind = Kind::Hold;
  Vec2 start = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  Vec2 direction = Vec2::UnitX();  // Sine: unit advance direction
  Vec2 center = Vec2::Zero();      // Circle
  double speed = 0.0;              // Line/Sine: m/s; Circle: rad/s
  double amplitude = 0.0;          // Sine: m; Circle: radius
  double wavelength = 1.0;         // Sine: m
  double phase = 0.0;              // Circle: initial angle

  static Trajectory line(const Vec2& start, const Vec2& goal, double speed);
  static Trajectory sine(const Vec2& start, const Vec2& direction, double speed,
                         double amplitude, double wavelength);
  static Trajectory circle(const Vec2& center, double radius, double angular_speed,
                           double phase);
  static Trajectory hold(const Vec2& at);

  ReferencePoint at(double t) const;

  /// Final resting point (Line/Hold) or the position at `horizon` otherwise.
  Vec2 goal_at(double horizon) const;

  /// Bearing of the initial direction of motion.
  double initial_heading() const;

  /// Throws std::invalid_argument if parameters are malformed or the stored
  /// derivatives disagree with central differences of position by > tol.
  void validate(double horizon, double tol = 1e-3) const;
};

std::string_view to_string(Trajectory::Kind k);
Trajectory::Kind parse_trajectory_kind(std::string_view name);

}  // namespace soatt
