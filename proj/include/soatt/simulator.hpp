#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "soatt/safety.hpp"
#include "soatt/solver.hpp"
#include "soatt/tracking.hpp"
#include "soatt/trajectory.hpp"

namespace soatt {

struct RobotSpec {
  RobotParams params;
  Trajectory trajectory;
  /// Initial control-point position; defaults to the reference at t = 0.
  std::optional<Vec2> initial_position;
  /// Initial heading; defaults to the bearing of the reference.
  std::optional<double> initial_heading;
};

struct Obstacle {
  Vec2 center = Vec2::Zero();
  double radius = 0.5;
};

struct SolverConfig {
  double epsilon = 0.005;
  /// Virtual-time step of one inner iteration; <= 0 means "use sim dt".
  double step = 0.0;
  int inner_iterations = 1;
  double inner_tol = 0.0;
  bool warm_start = true;
  /// Max constraint violation of the applied command tolerated before the
  /// step is logged as infeasible (and, with fallback_brake, every robot brakes).
  double feasibility_tol = 1e-2;
  bool fallback_brake = true;
  /// Extra inner iterations spent on a step whose command still violates a
  /// row by more than rescue_tol.
  int rescue_iterations = 0;
  double rescue_tol = 1e-3;
  /// Multipliers below this are set to zero after each solve. On a slack row
  /// the iteration only decays eta geometrically, so it never reaches 0 and
  /// would keep the multiplier gate open.
  double eta_floor = 1e-9;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::vector<RobotSpec> robots;
  std::vector<Obstacle> obstacles;
  SafetyGains safety;
  TrackingGains tracking;
  DetectorThresholds thresholds;
  CaStrategy ca = CaStrategy::Proposed;
  DeadlockStrategy deadlock = DeadlockStrategy::AuxiliaryTerm;
  DeadlockDetector detector = DeadlockDetector::MultiplierGate;
  SolverConfig solver;
  double dt = 0.005;
  double total_time = 12.0;
  std::uint64_t seed = 0;
  /// Minimum on-time of the distance-modification deadlock strategy.
  double distance_mod_hysteresis = 0.1;
  /// Velocity-command mode: the QP is posed over wheel velocities.
  bool velocity_mode = false;
  double max_wheel_speed = 40.0;  // rad/s, velocity mode only
  /// Per-robot QPs with neighbours' commands frozen (ablation only).
  bool decentralized = false;

  int num_robots() const { return static_cast<int>(robots.size()); }
  int num_steps() const;
  /// Sensing range used for pair (i, j) given its d_safe.
  double sensing_range(double d_safe) const;

  /// Throws std::invalid_argument with the offending field.
  void validate() const;
};

/// Unordered pair of agents (robots first, then obstacles), i < j.
struct AgentPair {
  int i = 0;
  int j = 1;
  friend bool operator==(const AgentPair&, const AgentPair&) = default;
};

/// All pairs within sensing range, in the upper-triangular (alpha) order.
/// `radii` holds each agent's enclosing radius; pairs of two obstacles
/// (index >= num_robots) are skipped.
std::vector<AgentPair> neighbor_pairs(std::span<const Vec2> positions,
                                      std::span<const double> radii, int num_robots,
                                      const std::function<double(double)>& range_for_dsafe,
                                      double margin);

/// Convenience overload with a fixed range D and all agents robots.
std::vector<AgentPair> neighbor_pairs(std::span<const Vec2> positions, double range);

/// Antipodal circle: robot i starts at angle 2 pi i / N and tracks the chord
/// through the centre at `speed`, holding the goal after arrival.
ScenarioConfig circle_scenario(int n, double radius, double speed,
                               const RobotParams& params = {});

/// Position swap: `count` robots evenly spaced on a circle of diameter
/// `distance`, each advancing `distance` to the opposite point. Two robots
/// meet head-on; a single robot just tracks a straight line.
ScenarioConfig swap_scenario(int count, double distance, double speed,
                             const RobotParams& params = {});

/// Circle scenario with three static obstacles (radii 0.5, 0.75, 1.0)
/// placed inside the circle.
ScenarioConfig obstacle_scenario(int n, double radius, double speed,
                                 const RobotParams& params = {});

/// Largest N whose antipodal start positions on `radius` keep every
/// neighbouring pair at least d_safe apart.
int circle_capacity(double radius, double d_safe);

struct StepRecord {
  double time = 0.0;
  std::vector<RobotState> states;     // after the step
  std::vector<Vec2> ref_positions;    // reference at `time`
  std::vector<Vec2> applied_accel;    // clamped udot used for the step
  std::vector<std::int64_t> pair_alpha;  // 1-based alpha of each row
  std::vector<AgentPair> pairs;
  std::vector<double> eta;
  std::vector<bool> zeta_active;
  std::vector<bool> ca_active;
  bool feasibility_event = false;
};

struct SimTrace {
  double dt = 0.005;
  int num_robots = 0;
  int num_agents = 0;  // robots + obstacles
  std::vector<Obstacle> obstacles;
  std::vector<double> robot_radii;
  std::vector<Vec2> initial_positions;
  std::vector<StepRecord> steps;
  int feasibility_events = 0;
  std::int64_t solver_iterations = 0;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, int step)
      : std::runtime_error(what), step(step) {}
  int step;
};

/// Closed loop: neighbours -> deadlock detection -> zeta gate -> rows ->
/// QP -> solver -> clamp -> integrate -> record. Deterministic.
SimTrace run(const ScenarioConfig& config);

}  // namespace soatt
