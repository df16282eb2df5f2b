#include "soatt/trajectory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace soatt {

Trajectory Trajectory::line(const Vec2& start, const Vec2& goal, double speed) {
  Trajectory t;
  t.kind = Kind::Line;
  t.start = start;
  t.goal = goal;
  t.speed = speed;
  return t;
}

Trajectory Trajectory::sine(const Vec2& start, const Vec2& direction, double speed,
                            double amplitude, double wavelength) {
  Trajectory t;
  t.kind = Kind::Sine;
  t.start = start;
  t.direction = direction.normalized();
  t.speed = speed;
  t.amplitude = amplitude;
  t.wavelength = wavelength;
  return t;
}

Trajectory Trajectory::circle(const Vec2& center, double radius, double angular_speed,
                              double phase) {
  Trajectory t;
  t.kind = Kind::Circle;
  t.center = center;
  t.amplitude = radius;
  t.speed = angular_speed;
  t.phase = phase;
  t.start = center + radius * Vec2(std::cos(phase), std::sin(phase));
  return t;
}

Trajectory Trajectory::hold(const Vec2& at) {
  Trajectory t;
  t.kind = Kind::Hold;
  t.start = at;
  t.goal = at;
  return t;
}

ReferencePoint Trajectory::at(double t) const {
  ReferencePoint ref;
  switch (kind) {
    case Kind::Line: {
      const Vec2 span = goal - start;
      const double length = span.norm();
      if (length == 0.0 || speed <= 0.0) {
        ref.position = goal;
        break;
      }
      const double travelled = speed * t;
      if (travelled >= length) {
        ref.position = goal;
      } else {
        const Vec2 dir = span / length;
        ref.position = start + travelled * dir;
        ref.velocity = speed * dir;
      }
      break;
    }
    case Kind::Sine: {
      const Vec2 normal{-direction.y(), direction.x()};
      const double w = 2.0 * std::numbers::pi * speed / wavelength;
      ref.position = start + speed * t * direction + amplitude * std::sin(w * t) * normal;
      ref.velocity = speed * direction + amplitude * w * std::cos(w * t) * normal;
      ref.accel = -amplitude * w * w * std::sin(w * t) * normal;
      break;
    }
    case Kind::Circle: {
      const double a = phase + speed * t;
      const Vec2 radial{std::cos(a), std::sin(a)};
      const Vec2 tangent{-std::sin(a), std::cos(a)};
      ref.position = center + amplitude * radial;
      ref.velocity = amplitude * speed * tangent;
      ref.accel = -amplitude * speed * speed * radial;
      break;
    }
    case Kind::Hold:
      ref.position = start;
      break;
  }
  return ref;
}

Vec2 Trajectory::goal_at(double horizon) const {
  if (kind == Kind::Line || kind == Kind::Hold) return goal;
  return at(horizon).position;
}

double Trajectory::initial_heading() const {
  Vec2 v = at(0.0).velocity;
  if (kind == Kind::Line) v = goal - start;
  if (v.norm() == 0.0) return 0.0;
  return std::atan2(v.y(), v.x());
}

void Trajectory::validate(double horizon, double tol) const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("trajectory: " + what);
  };
  if (!start.allFinite() || !goal.allFinite() || !center.allFinite())
    fail("points must be finite");
  switch (kind) {
    case Kind::Line:
      if (!(speed > 0.0)) fail("line speed must be > 0");
      break;
    case Kind::Sine:
      if (!(speed > 0.0)) fail("sine speed must be > 0");
      if (!(wavelength > 0.0)) fail("sine wavelength must be > 0");
      if (!(direction.norm() > 0.0)) fail("sine direction must be nonzero");
      break;
    case Kind::Circle:
      if (!(amplitude > 0.0)) fail("circle radius must be > 0");
      break;
    case Kind::Hold:
      break;
  }
  // Central-difference audit of the stored derivatives. The Line kind has a
  // velocity jump on arrival, so samples straddling it are skipped.
  const double h = 1e-5;
  const int samples = 64;
  double arrival = -1.0;
  if (kind == Kind::Line) arrival = (goal - start).norm() / speed;
  for (int k = 0; k <= samples; ++k) {
    const double t = horizon * k / samples + h;
    if (arrival >= 0.0 && std::abs(t - arrival) < 2.0 * h) continue;
    const ReferencePoint mid = at(t);
    const ReferencePoint lo = at(t - h);
    const ReferencePoint hi = at(t + h);
    const Vec2 vel_fd = (hi.position - lo.position) / (2.0 * h);
    const Vec2 acc_fd = (hi.velocity - lo.velocity) / (2.0 * h);
    if ((vel_fd - mid.velocity).norm() > tol || (acc_fd - mid.accel).norm() > tol)
      fail("velocity/acceleration inconsistent with position at t=" + std::to_string(t));
  }
}

std::string_view to_string(Trajectory::Kind k) {
  switch (k) {
    case Trajectory::Kind::Line: return "line";
    case Trajectory::Kind::Sine: return "sine";
    case Trajectory::Kind::Circle: return "circle";
    case Trajectory::Kind::Hold: return "hold";
  }
  return "?";
}

Trajectory::Kind parse_trajectory_kind(std::string_view name) {
  for (auto k : {Trajectory::Kind::Line, Trajectory::Kind::Sine,
                 Trajectory::Kind::Circle, Trajectory::Kind::Hold}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown trajectory kind '" + std::string(name) + "'");
}

}  // namespace soatt
