#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "soatt/kinematics.hpp"

namespace soatt {

enum class CaStrategy {
  Proposed,
  Braking,
  VelocityConservative,
  VelocityGated,
  AdaptiveRadius,
};

std::string_view to_string(CaStrategy s);
CaStrategy parse_ca_strategy(std::string_view name);

struct SafetyGains {
  double kappa1 = 2.0;   // rate of ||p_ij|| -> d_safe
  double kappa2 = 2.0;   // rate of h_ij -> 0
  double varsigma = 1.0; // velocity-level baselines
  double rho = 1.0;      // adaptive radius slope, s/m^2
  double sigma = 0.0;    // adaptive radius offset
  double margin = 0.0;   // d_safe = r_i + r_j + margin
  /// Neighbour sensing range; <= 0 means "3 * d_safe" of the pair.
  double sensing_range = 0.0;
  /// Acceleration rows ask for hdot + kappa2 h >= hold_margin instead of 0,
  /// covering the drift while udot is held over one step.
  double hold_margin = 0.0;

  void validate() const;
};

/// Raised when two centres coincide; the barrier is undefined there.
class DegenerateGeometry : public std::domain_error {
 public:
  DegenerateGeometry(int i, int j);
  int i;
  int j;
};

/// Everything a pairwise constraint needs about robots i and j.
///
/// When j is a static obstacle, `jac_j` and `drift_j` are zero so the row
/// places no coefficient on j.
struct PairState {
  int i = 0;
  int j = 1;
  bool j_is_obstacle = false;
  Vec2 rel_position = Vec2::Zero();  // p_i - p_j
  Vec2 rel_velocity = Vec2::Zero();  // v_i - v_j
  Mat2 jac_i = Mat2::Zero();
  Mat2 jac_j = Mat2::Zero();
  Vec2 drift_i = Vec2::Zero();  // Adot_i * u_i
  Vec2 drift_j = Vec2::Zero();
  double d_safe = 0.96;
  double radius_sum = 0.96;       // r_i + r_j
  double max_accel_sum = 4.0;     // a_i+ + a_j+
};

PairState make_pair(int i, const RobotState& si, const RobotParams& pi, int j,
                    const RobotState& sj, const RobotParams& pj,
                    double margin);

PairState make_obstacle_pair(int i, const RobotState& si,
                             const RobotParams& pi, int obstacle_index,
                             const Vec2& center, double radius, double margin);

/// One inequality coeff_i . udot_i + coeff_j . udot_j <= rhs.
struct ConstraintRow {
  int i = 0;
  int j = 1;
  bool j_is_obstacle = false;
  Vec2 coeff_i = Vec2::Zero();
  Vec2 coeff_j = Vec2::Zero();
  double rhs = 0.0;
};

// First-order barrier h = d||p||/dt + kappa1 (||p|| - d_safe).
double h_proposed(const PairState& pair, const SafetyGains& gains);

// Row enforcing hdot + kappa2 h >= 0, scaled by ||p_ij||.
ConstraintRow build_constraint_proposed(const PairState& pair,
                                        const SafetyGains& gains);

double braking_distance(double approach_speed, double max_accel_sum);

// sqrt(2 (a_i+ + a_j+) max(0, ||p|| - d_safe)) + d||p||/dt
double h_braking(const PairState& pair);

ConstraintRow build_constraint_braking(const PairState& pair,
                                       const SafetyGains& gains);

/// -2 p.v <= varsigma (||p||^2 - d^2), reported as both sides.
struct VelocityInequality {
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied() const { return lhs <= rhs; }
  double slack() const { return rhs - lhs; }
};

VelocityInequality velocity_conservative(const PairState& pair,
                                         const SafetyGains& gains,
                                         double d_safe);

ConstraintRow build_constraint_velocity_conservative(const PairState& pair,
                                                     const SafetyGains& gains,
                                                     double d_safe);

int beta_gate(const PairState& pair);

double adaptive_d_safe(const PairState& pair, const SafetyGains& gains,
                       double sensing_range);

/// Acceleration-level row for `strategy`; nullopt when the gated baseline
/// is switched off for this pair.
std::optional<ConstraintRow> build_constraint(CaStrategy strategy,
                                              const PairState& pair,
                                              const SafetyGains& gains,
                                              double sensing_range);

/// Velocity-level row over the wheel velocities u (velocity-command mode).
std::optional<ConstraintRow> build_velocity_row(CaStrategy strategy,
                                                const PairState& pair,
                                                const SafetyGains& gains,
                                                double sensing_range);

}  // namespace soatt
