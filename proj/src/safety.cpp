#include "soatt/safety.hpp"

#include <cmath>
#include <numbers>

namespace soatt {

namespace {

double norm_checked(const PairState& pair) {
  const double r = pair.rel_position.norm();
  if (!(r > 0.0)) throw DegenerateGeometry(pair.i, pair.j);
  return r;
}

// Row skeleton shared by every acceleration-level strategy:
// -p^T (A_i udot_i - A_j udot_j) <= rhs.
ConstraintRow row_skeleton(const PairState& pair) {
  ConstraintRow row;
  row.i = pair.i;
  row.j = pair.j;
  row.j_is_obstacle = pair.j_is_obstacle;
  const Vec2& p = pair.rel_position;
  row.coeff_i = -(p.transpose() * pair.jac_i).transpose();
  if (!pair.j_is_obstacle) row.coeff_j = (p.transpose() * pair.jac_j).transpose();
  return row;
}

// ||v||^2 - (p.v)^2/||p||^2 + p^T C Adot u : the part of ||p|| * d^2||p||/dt^2
// that does not depend on the decision variables.
double curvature_terms(const PairState& pair, double r) {
  const Vec2& p = pair.rel_position;
  const Vec2& v = pair.rel_velocity;
  const double pv = p.dot(v);
  return v.squaredNorm() - pv * pv / (r * r) +
         p.dot(pair.drift_i - pair.drift_j);
}

}  // namespace

std::string_view to_string(CaStrategy s) {
  switch (s) {
    case CaStrategy::Proposed: return "proposed";
    case CaStrategy::Braking: return "braking";
    case CaStrategy::VelocityConservative: return "velocity_conservative";
    case CaStrategy::VelocityGated: return "velocity_gated";
    case CaStrategy::AdaptiveRadius: return "adaptive_radius";
  }
  return "?";
}

CaStrategy parse_ca_strategy(std::string_view name) {
  for (auto s : {CaStrategy::Proposed, CaStrategy::Braking,
                 CaStrategy::VelocityConservative, CaStrategy::VelocityGated,
                 CaStrategy::AdaptiveRadius}) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown collision-avoidance strategy '" +
                              std::string(name) + "'");
}

void SafetyGains::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("safety gains: " + what);
  };
  if (!(kappa1 > 0.0)) fail("kappa1 must be > 0");
  if (!(kappa2 > 0.0)) fail("kappa2 must be > 0");
  if (!(varsigma > 0.0)) fail("varsigma must be > 0");
  if (!(rho > 0.0)) fail("rho must be > 0");
  if (!std::isfinite(sigma)) fail("sigma must be finite");
  if (!(margin >= 0.0)) fail("margin must be >= 0");
  if (!std::isfinite(sensing_range)) fail("sensing_range must be finite");
  if (!(hold_margin >= 0.0) || !std::isfinite(hold_margin)) fail("hold_margin must be >= 0");
}

DegenerateGeometry::DegenerateGeometry(int i_, int j_)
    : std::domain_error("coincident centres for pair (" + std::to_string(i_) +
                        ", " + std::to_string(j_) + ")"),
      i(i_),
      j(j_) {}

PairState make_pair(int i, const RobotState& si, const RobotParams& pi, int j,
                    const RobotState& sj, const RobotParams& pj,
                    double margin) {
  PairState pair;
  pair.i = i;
  pair.j = j;
  pair.rel_position = si.position - sj.position;
  pair.jac_i = jacobian(si.heading, pi);
  pair.jac_j = jacobian(sj.heading, pj);
  pair.rel_velocity = pair.jac_i * si.wheel_velocity - pair.jac_j * sj.wheel_velocity;
  pair.drift_i = jacobian_dot(si.heading, heading_rate(si.wheel_velocity, pi), pi) *
                 si.wheel_velocity;
  pair.drift_j = jacobian_dot(sj.heading, heading_rate(sj.wheel_velocity, pj), pj) *
                 sj.wheel_velocity;
  pair.radius_sum = pi.enclosing_radius + pj.enclosing_radius;
  pair.d_safe = pair.radius_sum + margin;
  pair.max_accel_sum = pi.max_point_accel + pj.max_point_accel;
  return pair;
}

PairState make_obstacle_pair(int i, const RobotState& si,
                             const RobotParams& pi, int obstacle_index,
                             const Vec2& center, double radius, double margin) {
  PairState pair;
  pair.i = i;
  pair.j = obstacle_index;
  pair.j_is_obstacle = true;
  pair.rel_position = si.position - center;
  pair.jac_i = jacobian(si.heading, pi);
  pair.rel_velocity = pair.jac_i * si.wheel_velocity;
  pair.drift_i = jacobian_dot(si.heading, heading_rate(si.wheel_velocity, pi), pi) *
                 si.wheel_velocity;
  pair.radius_sum = pi.enclosing_radius + radius;
  pair.d_safe = pair.radius_sum + margin;
  // An obstacle cannot brake; only the robot's capability counts.
  pair.max_accel_sum = pi.max_point_accel;
  return pair;
}

double h_proposed(const PairState& pair, const SafetyGains& gains) {
  const double r = norm_checked(pair);
  return pair.rel_position.dot(pair.rel_velocity) / r +
         gains.kappa1 * (r - pair.d_safe);
}

ConstraintRow build_constraint_proposed(const PairState& pair,
                                        const SafetyGains& gains) {
  const double r = norm_checked(pair);
  const double pv = pair.rel_position.dot(pair.rel_velocity);
  ConstraintRow row = row_skeleton(pair);
  row.rhs = curvature_terms(pair, r) + (gains.kappa1 + gains.kappa2) * pv +
            gains.kappa1 * gains.kappa2 * r * (r - pair.d_safe) -
            gains.hold_margin * r;
  return row;
}

double braking_distance(double approach_speed, double max_accel_sum) {
  return approach_speed * approach_speed / (2.0 * max_accel_sum);
}

double h_braking(const PairState& pair) {
  const double r = norm_checked(pair);
  const double gap = std::max(0.0, r - pair.d_safe);
  return std::sqrt(2.0 * pair.max_accel_sum * gap) +
         pair.rel_position.dot(pair.rel_velocity) / r;
}

ConstraintRow build_constraint_braking(const PairState& pair,
                                       const SafetyGains& gains) {
  const double r = norm_checked(pair);
  const double pv = pair.rel_position.dot(pair.rel_velocity);
  const double root = std::sqrt(2.0 * pair.max_accel_sum *
                                std::max(0.0, r - pair.d_safe));
  ConstraintRow row = row_skeleton(pair);
  // d/dt of the square root term times ||p||; frozen at zero once clamped.
  const double root_rate = root > 0.0 ? pair.max_accel_sum * pv / root : 0.0;
  row.rhs = curvature_terms(pair, r) + root_rate +
            gains.kappa2 * r * h_braking(pair) - gains.hold_margin * r;
  return row;
}

VelocityInequality velocity_conservative(const PairState& pair,
                                         const SafetyGains& gains,
                                         double d_safe) {
  const double r2 = pair.rel_position.squaredNorm();
  return {-2.0 * pair.rel_position.dot(pair.rel_velocity),
          gains.varsigma * (r2 - d_safe * d_safe)};
}

ConstraintRow build_constraint_velocity_conservative(const PairState& pair,
                                                     const SafetyGains& gains,
                                                     double d_safe) {
  // g = varsigma (||p||^2 - d^2) + 2 p.v >= 0, lifted to gdot + kappa2 g >= 0
  // and halved so the row scale matches the proposed one.
  norm_checked(pair);
  const Vec2& p = pair.rel_position;
  const Vec2& v = pair.rel_velocity;
  const double g = velocity_conservative(pair, gains, d_safe).slack();
  ConstraintRow row = row_skeleton(pair);
  row.rhs = gains.varsigma * p.dot(v) + v.squaredNorm() +
            p.dot(pair.drift_i - pair.drift_j) + 0.5 * gains.kappa2 * g;
  return row;
}

int beta_gate(const PairState& pair) {
  const double pv = pair.rel_position.dot(pair.rel_velocity);
  return (pv < 0.0 && pair.rel_position.norm() < pair.d_safe) ? 1 : 0;
}

double adaptive_d_safe(const PairState& pair, const SafetyGains& gains,
                       double sensing_range) {
  const double D = sensing_range;
  const double r = pair.radius_sum;
  const double pv = pair.rel_position.dot(pair.rel_velocity);
  return 0.5 * (D + r) +
         (D - r) / std::numbers::pi * std::atan(-gains.rho * pv + gains.sigma);
}

std::optional<ConstraintRow> build_constraint(CaStrategy strategy,
                                              const PairState& pair,
                                              const SafetyGains& gains,
                                              double sensing_range) {
  switch (strategy) {
    case CaStrategy::Proposed:
      return build_constraint_proposed(pair, gains);
    case CaStrategy::Braking:
      return build_constraint_braking(pair, gains);
    case CaStrategy::VelocityConservative:
      return build_constraint_velocity_conservative(pair, gains, pair.d_safe);
    case CaStrategy::VelocityGated:
      if (beta_gate(pair) == 0) return std::nullopt;
      return build_constraint_velocity_conservative(pair, gains, pair.d_safe);
    case CaStrategy::AdaptiveRadius:
      return build_constraint_velocity_conservative(
          pair, gains, adaptive_d_safe(pair, gains, sensing_range));
  }
  return std::nullopt;
}

std::optional<ConstraintRow> build_velocity_row(CaStrategy strategy,
                                                const PairState& pair,
                                                const SafetyGains& gains,
                                                double sensing_range) {
  const double r = norm_checked(pair);
  ConstraintRow row = row_skeleton(pair);
  switch (strategy) {
    case CaStrategy::Proposed:
      // h >= 0 scaled by ||p||: -p.v <= kappa1 ||p|| (||p|| - d_safe)
      row.rhs = gains.kappa1 * r * (r - pair.d_safe);
      return row;
    case CaStrategy::Braking:
      row.rhs = r * std::sqrt(2.0 * pair.max_accel_sum *
                              std::max(0.0, r - pair.d_safe));
      return row;
    case CaStrategy::VelocityGated:
      if (beta_gate(pair) == 0) return std::nullopt;
      [[fallthrough]];
    case CaStrategy::VelocityConservative:
      row.rhs = 0.5 * velocity_conservative(pair, gains, pair.d_safe).rhs;
      return row;
    case CaStrategy::AdaptiveRadius:
      row.rhs = 0.5 * velocity_conservative(
                          pair, gains, adaptive_d_safe(pair, gains, sensing_range))
                          .rhs;
      return row;
  }
  return std::nullopt;
}

}  // namespace soatt
