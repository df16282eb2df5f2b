#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "soatt/metrics.hpp"
#include "soatt/simulator.hpp"

using namespace soatt;

namespace {

ScenarioConfig head_on(double total_time) {
  ScenarioConfig cfg = swap_scenario(2, 4.0, 0.6);
  cfg.total_time = total_time;
  cfg.deadlock = DeadlockStrategy::None;
  cfg.solver.inner_iterations = 300;
  cfg.solver.step = 0.0005;
  cfg.solver.inner_tol = 1e-9;
  return cfg;
}

bool same_trace(const SimTrace& a, const SimTrace& b) {
  if (a.steps.size() != b.steps.size()) return false;
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    const StepRecord& x = a.steps[k];
    const StepRecord& y = b.steps[k];
    if (x.time != y.time || x.eta != y.eta || x.pair_alpha != y.pair_alpha ||
        x.zeta_active != y.zeta_active || x.ca_active != y.ca_active)
      return false;
    for (std::size_t r = 0; r < x.states.size(); ++r) {
      if (x.states[r].position != y.states[r].position ||
          x.states[r].heading != y.states[r].heading ||
          x.states[r].wheel_velocity != y.states[r].wheel_velocity ||
          x.applied_accel[r] != y.applied_accel[r])
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("neighbor_pairs") {
  const std::vector<Vec2> line{Vec2(0, 0), Vec2(1, 0), Vec2(3, 0)};
  CHECK(neighbor_pairs(line, 0.0).empty());
  CHECK(neighbor_pairs(line, 10.0).size() == 3);
  const auto some = neighbor_pairs(line, 2.0);
  REQUIRE(some.size() == 2);
  CHECK(some[0] == AgentPair{0, 1});
  CHECK(some[1] == AgentPair{1, 2});
}

TEST_CASE("circle scenario geometry") {
  const ScenarioConfig two = circle_scenario(2, 6.0, 1.0);
  REQUIRE(two.robots.size() == 2);
  CHECK((two.robots[0].trajectory.at(0).position - Vec2(6, 0)).norm() < 1e-12);
  CHECK((two.robots[1].trajectory.at(0).position - Vec2(-6, 0)).norm() < 1e-12);
  CHECK((two.robots[0].trajectory.goal_at(12) - Vec2(-6, 0)).norm() < 1e-12);
  CHECK((two.robots[1].trajectory.goal_at(12) - Vec2(6, 0)).norm() < 1e-12);
  CHECK(circle_capacity(6.0, 0.96) == 39);
  CHECK_THROWS_AS(circle_scenario(0, 6.0, 1.0), std::invalid_argument);
  const ScenarioConfig ten = circle_scenario(10, 6.0, 1.0);
  for (const RobotSpec& r : ten.robots)
    CHECK(std::abs(r.trajectory.at(0).position.norm() - 6.0) < 1e-12);
}

TEST_CASE("swap and obstacle scenarios") {
  const ScenarioConfig four = swap_scenario(4, 2.24, 0.1);
  CHECK(four.robots.size() == 4);
  CHECK((four.robots[0].trajectory.at(0).position -
         four.robots[0].trajectory.goal_at(100.0)).norm() == doctest::Approx(2.24));
  const ScenarioConfig one = swap_scenario(1, 2.24, 0.1);
  CHECK(one.robots.size() == 1);
  const ScenarioConfig obs = obstacle_scenario(10, 6.0, 1.0);
  REQUIRE(obs.obstacles.size() == 3);
  CHECK(obs.obstacles[0].radius == 0.5);
  CHECK(obs.obstacles[1].radius == 0.75);
  CHECK(obs.obstacles[2].radius == 1.0);
}

TEST_CASE("scenario validation") {
  ScenarioConfig cfg = circle_scenario(2, 6.0, 1.0);
  CHECK_NOTHROW(cfg.validate());
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = circle_scenario(2, 0.3, 1.0);  // starts 0.6 apart, closer than 0.96
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("single robot converges onto a straight line") {
  ScenarioConfig cfg;
  RobotSpec r;
  r.trajectory = Trajectory::line(Vec2(0, 0), Vec2(5, 0), 0.8);
  cfg.robots.push_back(r);
  cfg.total_time = 12.0;
  const SimTrace trace = run(cfg);
  CHECK(trace.steps.size() == 2400);
  const MetricsReport rep = compute_report(trace, 0.96);
  CHECK(rep.final_error[0] < 1e-2);
  CHECK(rep.intervention.mean == 0.0);
}

TEST_CASE("two robots head-on stay apart") {
  const SimTrace trace = run(head_on(10.0));
  const SafetyAudit audit = safety_audit(trace, 0.96);
  CHECK(audit.min_distance >= 0.96 - 1e-3);
  CHECK(audit.violations == 0);
}

TEST_CASE("runs are deterministic") {
  ScenarioConfig cfg = circle_scenario(6, 3.0, 1.0);
  cfg.total_time = 3.0;
  cfg.solver.inner_iterations = 20;
  cfg.solver.step = 0.0005;
  CHECK(same_trace(run(cfg), run(cfg)));
}

TEST_CASE("trace invariants") {
  ScenarioConfig cfg = circle_scenario(8, 3.0, 1.0);
  cfg.total_time = 4.0;
  cfg.solver.inner_iterations = 50;
  cfg.solver.step = 0.0005;
  const SimTrace trace = run(cfg);
  REQUIRE(trace.steps.size() == 800);
  double prev_time = 0.0;
  std::vector<Vec2> prev = trace.initial_positions;
  std::vector<double> prev_heading;
  for (const RobotSpec& r : cfg.robots) prev_heading.push_back(r.trajectory.initial_heading());
  bool saw_rows = false;
  for (const StepRecord& s : trace.steps) {
    CHECK(s.time > prev_time);
    prev_time = s.time;
    for (double e : s.eta) CHECK(e >= 0.0);
    saw_rows = saw_rows || !s.eta.empty();
    std::vector<bool> active(8, false);
    for (std::size_t r = 0; r < s.pairs.size(); ++r) {
      if (s.eta[r] > 0.0) {
        active[static_cast<std::size_t>(s.pairs[r].i)] = true;
        if (s.pairs[r].j < 8) active[static_cast<std::size_t>(s.pairs[r].j)] = true;
      }
    }
    for (int k = 0; k < 8; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      CHECK(s.ca_active[ku] == active[ku]);
      const RobotParams& p = cfg.robots[ku].params;
      const Vec2& a = s.applied_accel[ku];
      CHECK((a.array() <= p.max_wheel_accel.array()).all());
      CHECK((a.array() >= p.min_wheel_accel.array()).all());
      // Position increment equals A(previous heading) u dt.
      const Vec2 step = jacobian(prev_heading[ku], p) * s.states[ku].wheel_velocity * cfg.dt;
      CHECK((s.states[ku].position - prev[ku] - step).norm() < 1e-9);
      prev[ku] = s.states[ku].position;
      prev_heading[ku] = s.states[ku].heading;
    }
  }
  CHECK(saw_rows);
}

TEST_CASE("obstacles are avoided") {
  ScenarioConfig cfg = obstacle_scenario(6, 6.0, 1.0);
  cfg.total_time = 14.0;
  cfg.solver.inner_iterations = 300;
  cfg.solver.step = 0.0005;
  cfg.solver.inner_tol = 1e-9;
  cfg.solver.rescue_iterations = 5000;
  cfg.safety.hold_margin = 0.1;
  const SimTrace trace = run(cfg);
  CHECK(trace.feasibility_events == 0);
  const SafetyAudit audit = safety_audit(trace, 0.96);
  CHECK(audit.min_obstacle_clearance >= -1e-3);
  CHECK(audit.violations == 0);
}

TEST_CASE("infeasible steps are logged and brake when asked") {
  RobotParams params;
  params.max_wheel_accel = Vec2(0.05, 0.05);
  params.min_wheel_accel = Vec2(-0.05, -0.05);
  for (const bool brake : {true, false}) {
    CAPTURE(brake);
    ScenarioConfig cfg = swap_scenario(2, 2.0, 1.0, params);
    cfg.total_time = 0.5;
    cfg.safety.hold_margin = 50.0;
    cfg.solver.inner_iterations = 300;
    cfg.solver.step = 0.0005;
    cfg.solver.fallback_brake = brake;
    const SimTrace trace = run(cfg);
    REQUIRE(trace.feasibility_events > 0);
    std::vector<RobotState> prev(2);
    for (int r = 0; r < 2; ++r) prev[static_cast<std::size_t>(r)].wheel_velocity = Vec2::Zero();
    bool differs = false;
    for (const StepRecord& s : trace.steps) {
      if (s.feasibility_event) {
        for (std::size_t r = 0; r < 2; ++r) {
          const Vec2 b = Vec2(-prev[r].wheel_velocity / cfg.dt)
                             .cwiseMax(params.min_wheel_accel)
                             .cwiseMin(params.max_wheel_accel);
          if (brake) CHECK((s.applied_accel[r] - b).norm() < 1e-12);
          else differs = differs || (s.applied_accel[r] - b).norm() > 1e-6;
        }
      }
      prev = s.states;
    }
    if (!brake) CHECK(differs);
  }
}

TEST_CASE("velocity-command mode runs") {
  ScenarioConfig cfg = circle_scenario(4, 3.0, 1.0);
  cfg.total_time = 2.0;
  cfg.velocity_mode = true;
  cfg.ca = CaStrategy::VelocityConservative;
  cfg.solver.inner_iterations = 50;
  cfg.solver.step = 0.0005;
  const SimTrace trace = run(cfg);
  CHECK(trace.steps.size() == 400);
}
