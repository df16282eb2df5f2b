#include "soatt/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace soatt {

void TrackingGains::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("tracking gains: " + what);
  };
  if (!(kappa3 > 0.0)) fail("kappa3 must be > 0");
  if (!(kappa4 > 0.0)) fail("kappa4 must be > 0");
  if (!(zeta >= 0.0)) fail("zeta must be >= 0");
  if (!(kappa4 > zeta)) fail("kappa4 must exceed zeta for tracking convergence");
  if (!(std::abs(q) <= std::numbers::pi)) fail("q must lie in [-pi, pi]");
}

std::string_view to_string(DeadlockStrategy s) {
  switch (s) {
    case DeadlockStrategy::None: return "none";
    case DeadlockStrategy::SbcDisturbance: return "sbc_disturbance";
    case DeadlockStrategy::DistanceMod: return "distance_mod";
    case DeadlockStrategy::VelocityPerturb: return "velocity_perturb";
    case DeadlockStrategy::AuxiliaryTerm: return "auxiliary_term";
  }
  return "?";
}

std::string_view to_string(DeadlockDetector d) {
  switch (d) {
    case DeadlockDetector::NearZeroVelocity: return "near_zero_velocity";
    case DeadlockDetector::PositionDwell: return "position_dwell";
    case DeadlockDetector::HeadingAngle: return "heading_angle";
    case DeadlockDetector::MultiplierGate: return "multiplier_gate";
  }
  return "?";
}

DeadlockStrategy parse_deadlock_strategy(std::string_view name) {
  for (auto s : {DeadlockStrategy::None, DeadlockStrategy::SbcDisturbance,
                 DeadlockStrategy::DistanceMod, DeadlockStrategy::VelocityPerturb,
                 DeadlockStrategy::AuxiliaryTerm}) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown deadlock strategy '" + std::string(name) + "'");
}

DeadlockDetector parse_deadlock_detector(std::string_view name) {
  for (auto d : {DeadlockDetector::NearZeroVelocity, DeadlockDetector::PositionDwell,
                 DeadlockDetector::HeadingAngle, DeadlockDetector::MultiplierGate}) {
    if (name == to_string(d)) return d;
  }
  throw std::invalid_argument("unknown deadlock detector '" + std::string(name) + "'");
}

Mat2 rotation_q(double q) {
  const double c = std::cos(q);
  const double s = std::sin(q);
  Mat2 m;
  m << c, -s, s, c;
  return m;
}

Vec2 dzr_nominal(const RobotState& state, const ReferencePoint& ref,
                 const TrackingGains& gains, const RobotParams& params) {
  const Mat2 jac = jacobian(state.heading, params);
  const Mat2 jac_dot =
      jacobian_dot(state.heading, heading_rate(state.wheel_velocity, params), params);
  const Vec2 vel_err = jac * state.wheel_velocity - ref.velocity;
  const Vec2 pos_err = state.position - ref.position;
  return ref.accel - jac_dot * state.wheel_velocity -
         (gains.kappa3 + gains.kappa4) * vel_err -
         gains.kappa3 * gains.kappa4 * pos_err;
}

Vec2 dzr_deadlock_auxiliary(const RobotState& state, const ReferencePoint& ref,
                            const TrackingGains& gains,
                            const RobotParams& params, bool zeta_active) {
  Vec2 dzr = dzr_nominal(state, ref, gains, params);
  if (!zeta_active) return dzr;
  if (!(gains.zeta < gains.kappa4))
    throw std::invalid_argument("auxiliary term requires zeta < kappa4");
  const Vec2 err = jacobian(state.heading, params) * state.wheel_velocity -
                   ref.velocity + gains.kappa3 * (state.position - ref.position);
  dzr -= gains.zeta * (rotation_q(gains.q) * err);
  return dzr;
}

Vec2 perturb_preferred_velocity(const Vec2& v_d, const TrackingGains& gains,
                                bool zeta_active) {
  if (!zeta_active) return v_d;
  return v_d - gains.zeta * (rotation_q(gains.q) * v_d);
}

Vec2 sbc_disturbance(const Vec2& dzr, double q) {
  return dzr - rotation_q(q) * dzr;
}

Vec2 relative_distance_mod(const Vec2& p_ij, double q) {
  return p_ij - rotation_q(q) * p_ij;
}

int pair_alpha(int i, int j, int n) {
  return (i - 1) * (n - 1) + j - i - (i - 2) * (i - 1) / 2;
}

std::vector<bool> zeta_gate(std::span<const double> eta, int n) {
  if (n < 0 || eta.size() != static_cast<std::size_t>(n) * (n - 1) / 2)
    throw std::invalid_argument("zeta_gate: multiplier vector has " +
                                std::to_string(eta.size()) + " entries, expected " +
                                std::to_string(n * (n - 1) / 2));
  std::vector<bool> active(static_cast<std::size_t>(n), false);
  for (int i = 1; i < n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (eta[static_cast<std::size_t>(pair_alpha(i, j, n) - 1)] > 0.0) {
        active[static_cast<std::size_t>(i - 1)] = true;
        active[static_cast<std::size_t>(j - 1)] = true;
      }
    }
  }
  return active;
}

bool detect_deadlock(std::span<const DetectorSample> window,
                     DeadlockDetector mechanism, const DetectorThresholds& t,
                     double dt) {
  if (window.empty()) return false;
  const DetectorSample& now = window.back();
  switch (mechanism) {
    case DeadlockDetector::NearZeroVelocity:
      return now.velocity.norm() < t.speed &&
             now.preferred_velocity.norm() > t.preferred_speed;
    case DeadlockDetector::PositionDwell: {
      const auto dwell_steps = static_cast<std::size_t>(std::lround(t.dwell_time / dt));
      if (window.size() < dwell_steps + 1) return false;
      const DetectorSample& then = window[window.size() - 1 - dwell_steps];
      return (now.position - then.position).norm() < t.dwell_displacement &&
             (now.position - now.goal).norm() > t.goal_distance;
    }
    case DeadlockDetector::HeadingAngle: {
      const Vec2 dir{std::cos(now.heading), std::sin(now.heading)};
      for (const Vec2& other : now.neighbours) {
        const Vec2 to = other - now.position;
        const double len = to.norm();
        if (len == 0.0) continue;
        const double cosang = std::clamp(dir.dot(to) / len, -1.0, 1.0);
        if (std::acos(cosang) < t.heading_angle) return true;
      }
      return false;
    }
    case DeadlockDetector::MultiplierGate:
      return false;
  }
  return false;
}

}  // namespace soatt
