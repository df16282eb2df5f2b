#pragma once

#include <limits>
#include <span>
#include <vector>

#include "soatt/simulator.hpp"

namespace soatt {

struct ProximityStats {
  double rmse = 0.0;
  double mae = 0.0;
  double std_dev = 0.0;  // population
};

/// Statistics of a per-step error series.
ProximityStats proximity_stats(std::span<const double> errors);

/// Series e_t = mean over robots of ||p_i(t) - p_d_i(t)||.
std::vector<double> tracking_error_series(const SimTrace& trace);
/// Same series for a single robot.
std::vector<double> tracking_error_series(const SimTrace& trace, int robot);

ProximityStats proximity_stats(const SimTrace& trace);

struct InterventionTime {
  std::vector<double> per_robot;  // seconds
  double mean = 0.0;
};

/// Time each robot spends with a positive multiplier on any of its pairs.
InterventionTime intervention_time(const SimTrace& trace);

struct SafetyAudit {
  double min_distance = std::numeric_limits<double>::infinity();
  int violations = 0;  // (step, pair) samples below d_safe - tolerance
  int first_violation_step = -1;
  /// min over robot/obstacle pairs of distance minus both radii.
  double min_obstacle_clearance = std::numeric_limits<double>::infinity();
  int obstacle_violations = 0;
};

/// Scans every recorded step and robot pair (and robot/obstacle pair).
SafetyAudit safety_audit(const SimTrace& trace, double d_safe, double tolerance = 1e-3);

struct RobotSafety {
  double min_distance = std::numeric_limits<double>::infinity();
  int violations = 0;
};

/// Same scan, attributed to both robots of each pair.
std::vector<RobotSafety> per_robot_safety(const SimTrace& trace, double d_safe,
                                          double tolerance = 1e-3);

struct DeadlockEvent {
  int robot = 0;
  double start = 0.0;
  double end = 0.0;
};

/// Maximal intervals during which a robot's deadlock gate was open.
std::vector<DeadlockEvent> deadlock_events(const SimTrace& trace);

struct MetricsReport {
  ProximityStats proximity;
  std::vector<ProximityStats> per_robot_proximity;
  InterventionTime intervention;
  SafetyAudit safety;
  std::vector<RobotSafety> per_robot_safety;
  std::vector<double> final_error;  // ||p_i - p_d_i|| at the last step
  int goals_reached = 0;            // final_error below goal_tolerance
  std::vector<DeadlockEvent> deadlocks;
  int feasibility_events = 0;
  double horizon = 0.0;
};

MetricsReport compute_report(const SimTrace& trace, double d_safe,
                             double goal_tolerance = 0.05);

}  // namespace soatt
