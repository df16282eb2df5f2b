#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "soatt/kinematics.hpp"

namespace soatt {

struct TrackingGains {
  double kappa3 = 1.0;
  double kappa4 = 4.0;
  double zeta = 2.0;  // deviation magnitude while the deadlock gate is open
  double q = 0.5235987755982988;  // rotation angle of Q, radians

  /// Enforces kappa3, kappa4 > 0, zeta >= 0, kappa4 > zeta, |q| <= pi.
  void validate() const;
};

struct ReferencePoint {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 accel = Vec2::Zero();
};

enum class DeadlockStrategy {
  None,
  SbcDisturbance,
  DistanceMod,
  VelocityPerturb,
  AuxiliaryTerm,
};

enum class DeadlockDetector {
  NearZeroVelocity,
  PositionDwell,
  HeadingAngle,
  MultiplierGate,
};

std::string_view to_string(DeadlockStrategy s);
std::string_view to_string(DeadlockDetector d);
DeadlockStrategy parse_deadlock_strategy(std::string_view name);
DeadlockDetector parse_deadlock_detector(std::string_view name);

Mat2 rotation_q(double q);

/// Target for A_i * udot_i that makes the tracking error decay as
/// e' = -kappa4 e with e = (v - v_d) + kappa3 (p - p_d).
Vec2 dzr_nominal(const RobotState& state, const ReferencePoint& ref,
                 const TrackingGains& gains, const RobotParams& params);

/// Nominal target plus -zeta Q (A u - v_d + kappa3 l) when `zeta_active`.
/// Throws std::invalid_argument if the gate is open and zeta >= kappa4.
Vec2 dzr_deadlock_auxiliary(const RobotState& state, const ReferencePoint& ref,
                            const TrackingGains& gains,
                            const RobotParams& params, bool zeta_active);

Vec2 perturb_preferred_velocity(const Vec2& v_d, const TrackingGains& gains,
                                bool zeta_active);

// (I - Q) dzr
Vec2 sbc_disturbance(const Vec2& dzr, double q);

// (I - Q) p_ij
Vec2 relative_distance_mod(const Vec2& p_ij, double q);

/// 1-based position of pair (i, j), 1 <= i < j <= n, in the row-major
/// upper-triangular ordering of all pairs.
int pair_alpha(int i, int j, int n);

/// Robots touched by a positive multiplier. `eta` is indexed by
/// pair_alpha - 1 and must have n (n - 1) / 2 entries.
std::vector<bool> zeta_gate(std::span<const double> eta, int n);

struct DetectorThresholds {
  double speed = 0.02;           // m/s, "near zero" velocity
  double preferred_speed = 0.05; // m/s, preferred velocity counted as non-zero
  double dwell_displacement = 0.01;  // m
  double dwell_time = 1.0;           // s
  double goal_distance = 0.05;       // m, dwell only counts away from the goal
  double heading_angle = 0.08726646259971647;  // 5 degrees
};

/// One robot's view of a time window, oldest first.
struct DetectorSample {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 preferred_velocity = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  double heading = 0.0;
  /// Positions of neighbours/obstacles currently in range.
  std::vector<Vec2> neighbours;
};

/// Applies one of the three geometric detectors to a single robot's window.
/// The multiplier gate is driven by zeta_gate instead and returns false here.
bool detect_deadlock(std::span<const DetectorSample> window,
                     DeadlockDetector mechanism, const DetectorThresholds& t,
                     double dt);

}  // namespace soatt
