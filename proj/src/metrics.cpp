#include "soatt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace soatt {

ProximityStats proximity_stats(std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("proximity_stats: empty series");
  double sum = 0.0;
  double sum_abs = 0.0;
  double sum_sq = 0.0;
  for (double e : errors) {
    sum += e;
    sum_abs += std::abs(e);
    sum_sq += e * e;
  }
  const auto n = static_cast<double>(errors.size());
  const double mean = sum / n;
  double var = 0.0;
  for (double e : errors) var += (e - mean) * (e - mean);
  return {std::sqrt(sum_sq / n), sum_abs / n, std::sqrt(var / n)};
}

std::vector<double> tracking_error_series(const SimTrace& trace) {
  std::vector<double> out;
  out.reserve(trace.steps.size());
  for (const StepRecord& s : trace.steps) {
    double acc = 0.0;
    for (std::size_t r = 0; r < s.states.size(); ++r)
      acc += (s.states[r].position - s.ref_positions[r]).norm();
    out.push_back(s.states.empty() ? 0.0 : acc / static_cast<double>(s.states.size()));
  }
  return out;
}

std::vector<double> tracking_error_series(const SimTrace& trace, int robot) {
  std::vector<double> out;
  out.reserve(trace.steps.size());
  const auto r = static_cast<std::size_t>(robot);
  for (const StepRecord& s : trace.steps)
    out.push_back((s.states[r].position - s.ref_positions[r]).norm());
  return out;
}

ProximityStats proximity_stats(const SimTrace& trace) {
  if (trace.steps.empty()) throw std::invalid_argument("proximity_stats: empty trace");
  const std::vector<double> e = tracking_error_series(trace);
  return proximity_stats(e);
}

InterventionTime intervention_time(const SimTrace& trace) {
  InterventionTime out;
  out.per_robot.assign(static_cast<std::size_t>(trace.num_robots), 0.0);
  std::vector<long> counts(static_cast<std::size_t>(trace.num_robots), 0);
  for (const StepRecord& s : trace.steps) {
    for (std::size_t r = 0; r < s.ca_active.size(); ++r) counts[r] += s.ca_active[r] ? 1 : 0;
  }
  double total = 0.0;
  for (std::size_t r = 0; r < counts.size(); ++r) {
    out.per_robot[r] = trace.dt * static_cast<double>(counts[r]);
    total += out.per_robot[r];
  }
  out.mean = counts.empty() ? 0.0 : total / static_cast<double>(counts.size());
  return out;
}

SafetyAudit safety_audit(const SimTrace& trace, double d_safe, double tolerance) {
  SafetyAudit audit;
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const auto& states = trace.steps[k].states;
    for (std::size_t i = 0; i < states.size(); ++i) {
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        const double d = (states[i].position - states[j].position).norm();
        audit.min_distance = std::min(audit.min_distance, d);
        if (d < d_safe - tolerance) {
          ++audit.violations;
          if (audit.first_violation_step < 0) audit.first_violation_step = static_cast<int>(k);
        }
      }
      for (const Obstacle& o : trace.obstacles) {
        const double ri = i < trace.robot_radii.size() ? trace.robot_radii[i] : 0.0;
        const double clearance = (states[i].position - o.center).norm() - ri - o.radius;
        audit.min_obstacle_clearance = std::min(audit.min_obstacle_clearance, clearance);
        if (clearance < -tolerance) ++audit.obstacle_violations;
      }
    }
  }
  return audit;
}

std::vector<RobotSafety> per_robot_safety(const SimTrace& trace, double d_safe,
                                          double tolerance) {
  std::vector<RobotSafety> out(static_cast<std::size_t>(trace.num_robots));
  for (const StepRecord& s : trace.steps) {
    for (std::size_t i = 0; i < s.states.size(); ++i) {
      for (std::size_t j = i + 1; j < s.states.size(); ++j) {
        const double d = (s.states[i].position - s.states[j].position).norm();
        for (std::size_t r : {i, j}) {
          out[r].min_distance = std::min(out[r].min_distance, d);
          if (d < d_safe - tolerance) ++out[r].violations;
        }
      }
    }
  }
  return out;
}

std::vector<DeadlockEvent> deadlock_events(const SimTrace& trace) {
  std::vector<DeadlockEvent> out;
  std::vector<double> open(static_cast<std::size_t>(trace.num_robots), -1.0);
  for (const StepRecord& s : trace.steps) {
    for (std::size_t r = 0; r < s.zeta_active.size(); ++r) {
      if (s.zeta_active[r] && open[r] < 0.0) open[r] = s.time - trace.dt;
      if (!s.zeta_active[r] && open[r] >= 0.0) {
        out.push_back({static_cast<int>(r), open[r], s.time - trace.dt});
        open[r] = -1.0;
      }
    }
  }
  const double end = trace.steps.empty() ? 0.0 : trace.steps.back().time;
  for (std::size_t r = 0; r < open.size(); ++r) {
    if (open[r] >= 0.0) out.push_back({static_cast<int>(r), open[r], end});
  }
  return out;
}

MetricsReport compute_report(const SimTrace& trace, double d_safe, double goal_tolerance) {
  MetricsReport rep;
  rep.proximity = proximity_stats(trace);
  for (int r = 0; r < trace.num_robots; ++r)
    rep.per_robot_proximity.push_back(proximity_stats(tracking_error_series(trace, r)));
  rep.intervention = intervention_time(trace);
  rep.safety = safety_audit(trace, d_safe);
  rep.per_robot_safety = per_robot_safety(trace, d_safe);
  const StepRecord& last = trace.steps.back();
  for (std::size_t r = 0; r < last.states.size(); ++r) {
    const double e = (last.states[r].position - last.ref_positions[r]).norm();
    rep.final_error.push_back(e);
    if (e < goal_tolerance) ++rep.goals_reached;
  }
  rep.deadlocks = deadlock_events(trace);
  rep.feasibility_events = trace.feasibility_events;
  rep.horizon = last.time;
  return rep;
}

}  // namespace soatt
