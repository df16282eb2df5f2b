#include "soatt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace soatt {

int ScenarioConfig::num_steps() const {
  return static_cast<int>(std::llround(total_time / dt));
}

double ScenarioConfig::sensing_range(double d_safe) const {
  return safety.sensing_range > 0.0 ? safety.sensing_range : 3.0 * d_safe;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("scenario: " + what);
  };
  if (!(dt > 0.0)) fail("dt must be > 0");
  if (!(total_time >= dt)) fail("total_time must be >= dt");
  if (robots.empty()) fail("at least one robot is required");
  if (!(solver.epsilon > 0.0)) fail("solver.epsilon must be > 0");
  if (solver.inner_iterations < 1) fail("solver.inner_iterations must be >= 1");
  if (solver.rescue_iterations < 0) fail("solver.rescue_iterations must be >= 0");
  if (!(solver.inner_tol >= 0.0)) fail("solver.inner_tol must be >= 0");
  if (!(solver.eta_floor >= 0.0)) fail("solver.eta_floor must be >= 0");
  if (!(max_wheel_speed > 0.0)) fail("max_wheel_speed must be > 0");
  safety.validate();
  tracking.validate();
  for (std::size_t k = 0; k < robots.size(); ++k) {
    try {
      robots[k].params.validate();
      robots[k].trajectory.validate(total_time);
    } catch (const std::invalid_argument& e) {
      fail("robot " + std::to_string(k) + ": " + e.what());
    }
  }
  for (std::size_t k = 0; k < obstacles.size(); ++k) {
    if (!(obstacles[k].radius > 0.0))
      fail("obstacle " + std::to_string(k) + ": radius must be > 0");
  }
  std::vector<Vec2> start(robots.size());
  for (std::size_t k = 0; k < robots.size(); ++k) {
    start[k] = robots[k].initial_position.value_or(robots[k].trajectory.at(0.0).position);
  }
  for (std::size_t a = 0; a < robots.size(); ++a) {
    for (std::size_t b = a + 1; b < robots.size(); ++b) {
      const double d_safe = robots[a].params.enclosing_radius +
                            robots[b].params.enclosing_radius + safety.margin;
      if ((start[a] - start[b]).norm() < d_safe)
        fail("robots " + std::to_string(a) + " and " + std::to_string(b) +
             " start closer than d_safe");
    }
  }
}

std::vector<AgentPair> neighbor_pairs(std::span<const Vec2> positions,
                                      std::span<const double> radii, int num_robots,
                                      const std::function<double(double)>& range_for_dsafe,
                                      double margin) {
  std::vector<AgentPair> out;
  const int n = static_cast<int>(positions.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (i >= num_robots) continue;  // obstacle-obstacle
      const double range = range_for_dsafe(radii[static_cast<std::size_t>(i)] +
                                           radii[static_cast<std::size_t>(j)] + margin);
      if ((positions[static_cast<std::size_t>(i)] - positions[static_cast<std::size_t>(j)])
              .norm() <= range)
        out.push_back({i, j});
    }
  }
  return out;
}

std::vector<AgentPair> neighbor_pairs(std::span<const Vec2> positions, double range) {
  const std::vector<double> radii(positions.size(), 0.0);
  return neighbor_pairs(positions, radii, static_cast<int>(positions.size()),
                        [range](double) { return range; }, 0.0);
}

ScenarioConfig circle_scenario(int n, double radius, double speed,
                               const RobotParams& params) {
  if (n < 1) throw std::invalid_argument("circle_scenario: n must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("circle_scenario: radius must be > 0");
  ScenarioConfig cfg;
  cfg.name = "circle" + std::to_string(n);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    const Vec2 start = radius * Vec2(std::cos(a), std::sin(a));
    RobotSpec spec;
    spec.params = params;
    spec.trajectory = Trajectory::line(start, -start, speed);
    cfg.robots.push_back(spec);
  }
  return cfg;
}

ScenarioConfig swap_scenario(int count, double distance, double speed,
                             const RobotParams& params) {
  if (count == 1) {
    ScenarioConfig cfg;
    cfg.name = "swap1";
    RobotSpec spec;
    spec.params = params;
    spec.trajectory = Trajectory::line(Vec2(-0.5 * distance, 0.0),
                                       Vec2(0.5 * distance, 0.0), speed);
    cfg.robots.push_back(spec);
    return cfg;
  }
  ScenarioConfig cfg = circle_scenario(count, 0.5 * distance, speed, params);
  cfg.name = "swap" + std::to_string(count);
  return cfg;
}

ScenarioConfig obstacle_scenario(int n, double radius, double speed,
                                 const RobotParams& params) {
  ScenarioConfig cfg = circle_scenario(n, radius, speed, params);
  cfg.name = "obstacles" + std::to_string(n);
  const double s = radius / 6.0;
  cfg.obstacles = {{Vec2(-1.5 * s, 1.2 * s), 0.5},
                   {Vec2(1.8 * s, 0.6 * s), 0.75},
                   {Vec2(0.0, -2.0 * s), 1.0}};
  return cfg;
}

int circle_capacity(double radius, double d_safe) {
  if (!(d_safe > 0.0) || !(radius > 0.0) || d_safe > 2.0 * radius) return 1;
  return static_cast<int>(std::floor(std::numbers::pi / std::asin(d_safe / (2.0 * radius))));
}

namespace {

struct Agents {
  std::vector<Vec2> positions;
  std::vector<double> radii;
};

std::int64_t alpha_key(const AgentPair& p, int num_agents) {
  return pair_alpha(p.i + 1, p.j + 1, num_agents);
}

// Velocity-mode target velocity: feed-forward plus proportional correction.
Vec2 velocity_target(const RobotState& s, const ReferencePoint& ref,
                     const TrackingGains& g) {
  return ref.velocity - g.kappa3 * (s.position - ref.position);
}

class Loop {
 public:
  explicit Loop(const ScenarioConfig& cfg) : cfg_(cfg) {
    n_ = cfg.num_robots();
    agents_ = n_ + static_cast<int>(cfg.obstacles.size());
    h_step_ = cfg.solver.step > 0.0 ? cfg.solver.step : cfg.dt;
    states_.resize(static_cast<std::size_t>(n_));
    for (int k = 0; k < n_; ++k) {
      const RobotSpec& spec = cfg.robots[static_cast<std::size_t>(k)];
      RobotState& s = states_[static_cast<std::size_t>(k)];
      s.position = spec.initial_position.value_or(spec.trajectory.at(0.0).position);
      s.heading = spec.initial_heading.value_or(spec.trajectory.initial_heading());
    }
    udot_ = VecX::Zero(2 * n_);
    hold_until_.assign(static_cast<std::size_t>(n_), -1.0);
    windows_.resize(static_cast<std::size_t>(n_));
    if (cfg.velocity_mode) {
      // Decision variable is the wheel velocity itself.
      udot_ = VecX::Zero(2 * n_);
    }
    dwell_steps_ = static_cast<std::size_t>(std::lround(cfg.thresholds.dwell_time / cfg.dt));
  }

  SimTrace execute() {
    SimTrace trace;
    trace.dt = cfg_.dt;
    trace.num_robots = n_;
    trace.num_agents = agents_;
    trace.obstacles = cfg_.obstacles;
    for (const RobotSpec& spec : cfg_.robots) trace.robot_radii.push_back(spec.params.enclosing_radius);
    for (const RobotState& s : states_) trace.initial_positions.push_back(s.position);
    const int steps = cfg_.num_steps();
    trace.steps.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
      try {
        trace.steps.push_back(step(k, trace));
      } catch (const SolverError& e) {
        throw SimulationError(std::string(e.what()) + " at step " + std::to_string(k), k);
      } catch (const DegenerateGeometry& e) {
        throw SimulationError(std::string(e.what()) + " at step " + std::to_string(k), k);
      }
    }
    return trace;
  }

 private:
  Agents agents() const {
    Agents a;
    for (int k = 0; k < n_; ++k) {
      a.positions.push_back(states_[static_cast<std::size_t>(k)].position);
      a.radii.push_back(cfg_.robots[static_cast<std::size_t>(k)].params.enclosing_radius);
    }
    for (const Obstacle& o : cfg_.obstacles) {
      a.positions.push_back(o.center);
      a.radii.push_back(o.radius);
    }
    return a;
  }

  PairState pair_state(const AgentPair& p) const {
    const auto i = static_cast<std::size_t>(p.i);
    if (p.j < n_) {
      const auto j = static_cast<std::size_t>(p.j);
      return make_pair(p.i, states_[i], cfg_.robots[i].params, p.j, states_[j],
                       cfg_.robots[j].params, cfg_.safety.margin);
    }
    const Obstacle& o = cfg_.obstacles[static_cast<std::size_t>(p.j - n_)];
    return make_obstacle_pair(p.i, states_[i], cfg_.robots[i].params, p.j, o.center,
                              o.radius, cfg_.safety.margin);
  }

  std::vector<bool> detect(double t, const std::vector<AgentPair>& pairs,
                           const std::vector<ReferencePoint>& refs,
                           const Agents& agents, const VecX& eta_carried) {
    std::vector<bool> fired(static_cast<std::size_t>(n_), false);
    if (cfg_.deadlock == DeadlockStrategy::None) return fired;
    if (cfg_.detector == DeadlockDetector::MultiplierGate) {
      for (std::size_t r = 0; r < pairs.size(); ++r) {
        if (eta_carried.size() > static_cast<Eigen::Index>(r) &&
            eta_carried[static_cast<Eigen::Index>(r)] > 0.0) {
          fired[static_cast<std::size_t>(pairs[r].i)] = true;
          if (pairs[r].j < n_) fired[static_cast<std::size_t>(pairs[r].j)] = true;
        }
      }
    } else {
      for (int k = 0; k < n_; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        DetectorSample sample;
        sample.position = states_[ku].position;
        sample.velocity = point_velocity(states_[ku], cfg_.robots[ku].params);
        sample.preferred_velocity = refs[ku].velocity;
        sample.goal = cfg_.robots[ku].trajectory.goal_at(cfg_.total_time);
        sample.heading = states_[ku].heading;
        for (const AgentPair& p : pairs) {
          if (p.i == k) sample.neighbours.push_back(agents.positions[static_cast<std::size_t>(p.j)]);
          if (p.j == k) sample.neighbours.push_back(agents.positions[static_cast<std::size_t>(p.i)]);
        }
        auto& window = windows_[ku];
        window.push_back(std::move(sample));
        while (window.size() > dwell_steps_ + 1) window.pop_front();
        const std::vector<DetectorSample> view(window.begin(), window.end());
        fired[ku] = detect_deadlock(view, cfg_.detector, cfg_.thresholds, cfg_.dt);
      }
    }
    if (cfg_.deadlock == DeadlockStrategy::DistanceMod) {
      for (int k = 0; k < n_; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (fired[ku]) hold_until_[ku] = t + cfg_.distance_mod_hysteresis;
        fired[ku] = fired[ku] || t < hold_until_[ku];
      }
    }
    return fired;
  }

  Vec2 target(int k, const ReferencePoint& ref_in, bool flag) const {
    const auto ku = static_cast<std::size_t>(k);
    const RobotState& s = states_[ku];
    const RobotParams& params = cfg_.robots[ku].params;
    ReferencePoint ref = ref_in;
    if (cfg_.velocity_mode) {
      if (cfg_.deadlock == DeadlockStrategy::VelocityPerturb)
        ref.velocity = perturb_preferred_velocity(ref.velocity, cfg_.tracking, flag);
      Vec2 v = velocity_target(s, ref, cfg_.tracking);
      if (cfg_.deadlock == DeadlockStrategy::SbcDisturbance && flag)
        v = sbc_disturbance(v, cfg_.tracking.q);
      if (cfg_.deadlock == DeadlockStrategy::AuxiliaryTerm && flag)
        v -= cfg_.tracking.zeta * (rotation_q(cfg_.tracking.q) *
                                    (point_velocity(s, params) - ref.velocity +
                                     cfg_.tracking.kappa3 * (s.position - ref.position)));
      return v;
    }
    switch (cfg_.deadlock) {
      case DeadlockStrategy::None:
      case DeadlockStrategy::DistanceMod:
        return dzr_nominal(s, ref, cfg_.tracking, params);
      case DeadlockStrategy::SbcDisturbance: {
        const Vec2 dzr = dzr_nominal(s, ref, cfg_.tracking, params);
        return flag ? sbc_disturbance(dzr, cfg_.tracking.q) : dzr;
      }
      case DeadlockStrategy::VelocityPerturb:
        ref.velocity = perturb_preferred_velocity(ref.velocity, cfg_.tracking, flag);
        return dzr_nominal(s, ref, cfg_.tracking, params);
      case DeadlockStrategy::AuxiliaryTerm:
        return dzr_deadlock_auxiliary(s, ref, cfg_.tracking, params, flag);
    }
    return Vec2::Zero();
  }

  // Builds rows and keys for the in-range pairs; gated-off pairs are skipped.
  void build_rows(const std::vector<AgentPair>& pairs, const std::vector<bool>& flags,
                  std::vector<ConstraintRow>& rows, std::vector<std::int64_t>& keys,
                  std::vector<AgentPair>& kept) const {
    for (const AgentPair& p : pairs) {
      PairState ps = pair_state(p);
      if (cfg_.deadlock == DeadlockStrategy::DistanceMod &&
          (flags[static_cast<std::size_t>(p.i)] ||
           (p.j < n_ && flags[static_cast<std::size_t>(p.j)])))
        ps.rel_position = relative_distance_mod(ps.rel_position, cfg_.tracking.q);
      const double range = cfg_.sensing_range(ps.d_safe);
      std::optional<ConstraintRow> row =
          cfg_.velocity_mode ? build_velocity_row(cfg_.ca, ps, cfg_.safety, range)
                             : build_constraint(cfg_.ca, ps, cfg_.safety, range);
      if (!row) continue;
      rows.push_back(*row);
      keys.push_back(alpha_key(p, agents_));
      kept.push_back(p);
    }
  }

  SolveResult solve(const QpProblem& qp, const VecX& eta_warm) {
    const SolverConfig& sc = cfg_.solver;
    SolverState start{udot_, eta_warm};
    SolveResult res =
        solve_step(start, qp, sc.epsilon, h_step_, sc.inner_iterations, sc.inner_tol);
    // Extra iterations, in chunks, while the command still violates a row.
    int budget = sc.rescue_iterations;
    while (budget > 0 && qp.num_rows() > 0 &&
           qp.max_violation(projection_box(res.state.udot, qp.lower, qp.upper)) >
               sc.rescue_tol) {
      const int chunk = std::min(budget, std::max(sc.inner_iterations, 100));
      SolveResult more = solve_step(res.state, qp, sc.epsilon, h_step_, chunk, sc.inner_tol);
      budget -= chunk;
      more.iterations += res.iterations;
      const bool stalled = more.iterations - res.iterations < chunk;
      res = std::move(more);
      if (stalled) break;
    }
    return res;
  }

  // Each robot solves alone with its neighbours' last commands frozen.
  VecX solve_decentralized(const QpProblem& qp, SimTrace& trace, VecX& eta_out) {
    VecX out = udot_;
    eta_out = VecX::Zero(qp.num_rows());
    for (int k = 0; k < n_; ++k) {
      std::vector<ConstraintRow> rows;
      std::vector<std::int64_t> keys;
      std::vector<int> source;
      for (int r = 0; r < qp.num_rows(); ++r) {
        const ConstraintRow& row = qp.rows[static_cast<std::size_t>(r)];
        ConstraintRow local;
        local.i = 0;
        local.j_is_obstacle = true;
        if (row.i == k) {
          local.coeff_i = row.coeff_i;
          local.rhs = row.rhs;
          if (!row.j_is_obstacle) local.rhs -= row.coeff_j.dot(udot_.segment<2>(2 * row.j));
        } else if (!row.j_is_obstacle && row.j == k) {
          local.coeff_i = row.coeff_j;
          local.rhs = row.rhs - row.coeff_i.dot(udot_.segment<2>(2 * row.i));
        } else {
          continue;
        }
        local.j = -1;
        rows.push_back(local);
        keys.push_back(qp.row_keys[static_cast<std::size_t>(r)]);
        source.push_back(r);
      }
      const auto ku = static_cast<std::size_t>(k);
      const Mat2 jac[1] = {qp.jac[ku]};
      const Vec2 tgt[1] = {qp.target.segment<2>(2 * k)};
      const Vec2 lo[1] = {qp.lower.segment<2>(2 * k)};
      const Vec2 hi[1] = {qp.upper.segment<2>(2 * k)};
      QpProblem local_qp = assemble_qp(jac, tgt, rows, keys, lo, hi);
      VecX eta = cfg_.solver.warm_start
                     ? carry_multipliers(local_keys_[ku], local_eta_[ku], keys)
                     : VecX::Zero(static_cast<Eigen::Index>(keys.size()));
      SolverState start{udot_.segment<2>(2 * k), eta};
      SolveResult res = solve_step(start, local_qp, cfg_.solver.epsilon, h_step_,
                                   cfg_.solver.inner_iterations, cfg_.solver.inner_tol);
      trace.solver_iterations += res.iterations;
      out.segment<2>(2 * k) = res.state.udot;
      local_keys_[ku] = keys;
      local_eta_[ku] = res.state.eta;
      for (std::size_t e = 0; e < source.size(); ++e)
        eta_out[source[e]] = std::max(eta_out[source[e]], res.state.eta[static_cast<Eigen::Index>(e)]);
    }
    return out;
  }

  StepRecord step(int k, SimTrace& trace) {
    const double t = k * cfg_.dt;
    std::vector<ReferencePoint> refs(static_cast<std::size_t>(n_));
    for (int r = 0; r < n_; ++r)
      refs[static_cast<std::size_t>(r)] = cfg_.robots[static_cast<std::size_t>(r)].trajectory.at(t);

    const Agents ag = agents();
    const std::vector<AgentPair> pairs = neighbor_pairs(
        ag.positions, ag.radii, n_,
        [this](double d_safe) { return cfg_.sensing_range(d_safe); }, cfg_.safety.margin);

    std::vector<std::int64_t> pair_keys;
    pair_keys.reserve(pairs.size());
    for (const AgentPair& p : pairs) pair_keys.push_back(alpha_key(p, agents_));
    const VecX eta_for_gate = carry_multipliers(keys_, eta_, pair_keys);

    const std::vector<bool> flags = detect(t, pairs, refs, ag, eta_for_gate);

    std::vector<Mat2> jacs(static_cast<std::size_t>(n_));
    std::vector<Vec2> targets(static_cast<std::size_t>(n_));
    std::vector<Vec2> lower(static_cast<std::size_t>(n_));
    std::vector<Vec2> upper(static_cast<std::size_t>(n_));
    for (int r = 0; r < n_; ++r) {
      const auto ru = static_cast<std::size_t>(r);
      const RobotParams& params = cfg_.robots[ru].params;
      jacs[ru] = jacobian(states_[ru].heading, params);
      targets[ru] = target(r, refs[ru], flags[ru]);
      if (cfg_.velocity_mode) {
        lower[ru] = Vec2::Constant(-cfg_.max_wheel_speed);
        upper[ru] = Vec2::Constant(cfg_.max_wheel_speed);
      } else {
        lower[ru] = params.min_wheel_accel;
        upper[ru] = params.max_wheel_accel;
      }
    }

    std::vector<ConstraintRow> rows;
    std::vector<std::int64_t> keys;
    std::vector<AgentPair> kept;
    build_rows(pairs, flags, rows, keys, kept);
    QpProblem qp = assemble_qp(jacs, targets, std::move(rows), keys, lower, upper);

    const VecX eta_warm = cfg_.solver.warm_start
                              ? carry_multipliers(keys_, eta_, qp.row_keys)
                              : VecX::Zero(qp.num_rows());
    VecX eta_new;
    if (cfg_.decentralized) {
      udot_ = solve_decentralized(qp, trace, eta_new);
    } else {
      SolveResult res = solve(qp, eta_warm);
      trace.solver_iterations += res.iterations;
      udot_ = res.state.udot;
      eta_new = res.state.eta;
    }
    for (double& e : eta_new)
      if (e < cfg_.solver.eta_floor) e = 0.0;
    keys_ = qp.row_keys;
    eta_ = eta_new;

    VecX command = projection_box(udot_, qp.lower, qp.upper);
    StepRecord rec;
    if (qp.num_rows() > 0 && qp.max_violation(command) > cfg_.solver.feasibility_tol) {
      rec.feasibility_event = true;
      ++trace.feasibility_events;
      for (int r = 0; r < n_ && cfg_.solver.fallback_brake; ++r) {
        const auto ru = static_cast<std::size_t>(r);
        const Vec2 brake = cfg_.velocity_mode ? Vec2::Zero()
                                              : Vec2(-states_[ru].wheel_velocity / cfg_.dt);
        command.segment<2>(2 * r) = brake.cwiseMax(lower[ru]).cwiseMin(upper[ru]);
      }
    }

    rec.time = t + cfg_.dt;
    rec.applied_accel.resize(static_cast<std::size_t>(n_));
    for (int r = 0; r < n_; ++r) {
      const auto ru = static_cast<std::size_t>(r);
      const RobotParams& params = cfg_.robots[ru].params;
      Vec2 accel = command.segment<2>(2 * r);
      if (cfg_.velocity_mode) accel = (accel - states_[ru].wheel_velocity) / cfg_.dt;
      states_[ru] = step_state(states_[ru], accel, cfg_.dt, params);
      if (cfg_.velocity_mode) states_[ru].wheel_velocity = command.segment<2>(2 * r);
      rec.applied_accel[ru] = accel;
    }

    rec.states = states_;
    rec.ref_positions.resize(static_cast<std::size_t>(n_));
    for (int r = 0; r < n_; ++r)
      rec.ref_positions[static_cast<std::size_t>(r)] =
          cfg_.robots[static_cast<std::size_t>(r)].trajectory.at(rec.time).position;
    rec.pair_alpha = qp.row_keys;
    rec.pairs = kept;
    rec.eta.assign(eta_.data(), eta_.data() + eta_.size());
    rec.zeta_active = flags;
    rec.ca_active.assign(static_cast<std::size_t>(n_), false);
    for (std::size_t r = 0; r < kept.size(); ++r) {
      if (rec.eta[r] > 0.0) {
        rec.ca_active[static_cast<std::size_t>(kept[r].i)] = true;
        if (kept[r].j < n_) rec.ca_active[static_cast<std::size_t>(kept[r].j)] = true;
      }
    }
    return rec;
  }

  const ScenarioConfig& cfg_;
  int n_ = 0;
  int agents_ = 0;
  double h_step_ = 0.005;
  std::vector<RobotState> states_;
  VecX udot_;
  std::vector<std::int64_t> keys_;
  VecX eta_;
  std::vector<double> hold_until_;
  std::vector<std::deque<DetectorSample>> windows_;
  std::size_t dwell_steps_ = 0;
  std::vector<std::vector<std::int64_t>> local_keys_ =
      std::vector<std::vector<std::int64_t>>(static_cast<std::size_t>(cfg_.num_robots()));
  std::vector<VecX> local_eta_ =
      std::vector<VecX>(static_cast<std::size_t>(cfg_.num_robots()));
};

}  // namespace

SimTrace run(const ScenarioConfig& config) {
  config.validate();
  Loop loop(config);
  return loop.execute();
}

}  // namespace soatt
