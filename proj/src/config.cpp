#include "soatt/config.hpp"

#include <cerrno>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <system_error>

#include <yaml-cpp/yaml.h>

namespace soatt {

ConfigError::ConfigError(const std::string& source_, int line_, const std::string& field_,
                         const std::string& message)
    : std::runtime_error(source_ + (line_ > 0 ? ":" + std::to_string(line_) : "") + ": " +
                         (field_.empty() ? "" : field_ + ": ") + message),
      source(source_),
      line(line_),
      field(field_) {}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& field,
                         const std::string& message) const {
    const int line = at.IsDefined() && at.Mark().line >= 0 ? at.Mark().line + 1 : 0;
    throw ConfigError(source_, line, field, message);
  }

  void expect_map(const YAML::Node& node, const std::string& field) const {
    if (!node.IsMap()) fail(node, field, "expected a mapping");
  }

  void only_keys(const YAML::Node& node, const std::string& field,
                 std::initializer_list<const char*> allowed) const {
    expect_map(node, field);
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) fail(kv.first, join(field, key), "unknown key");
    }
  }

  double number(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, field, "expected a number, got '" + node.Scalar() + "'");
    }
  }

  int integer(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected an integer");
    try {
      return node.as<int>();
    } catch (const YAML::Exception&) {
      fail(node, field, "expected an integer, got '" + node.Scalar() + "'");
    }
  }

  bool boolean(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected true or false");
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, field, "expected true or false, got '" + node.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a string");
    return node.Scalar();
  }

  Vec2 vec2(const YAML::Node& node, const std::string& field) const {
    if (node.IsScalar()) {
      const double v = number(node, field);
      return {v, v};
    }
    if (!node.IsSequence() || node.size() != 2) fail(node, field, "expected [x, y]");
    return {number(node[0], field), number(node[1], field)};
  }

  void read(const YAML::Node& map, const char* key, const std::string& field, double& out) const {
    if (const YAML::Node n = map[key]) out = number(n, join(field, key));
  }
  void read(const YAML::Node& map, const char* key, const std::string& field, int& out) const {
    if (const YAML::Node n = map[key]) out = integer(n, join(field, key));
  }
  void read(const YAML::Node& map, const char* key, const std::string& field, bool& out) const {
    if (const YAML::Node n = map[key]) out = boolean(n, join(field, key));
  }
  void read(const YAML::Node& map, const char* key, const std::string& field, Vec2& out) const {
    if (const YAML::Node n = map[key]) out = vec2(n, join(field, key));
  }
  void read_deg(const YAML::Node& map, const char* key, const std::string& field,
                double& out) const {
    if (const YAML::Node n = map[key]) out = number(n, join(field, key)) * kDeg;
  }

  template <class Parse>
  auto choice(const YAML::Node& node, const std::string& field, Parse parse) const {
    const std::string name = text(node, field);
    try {
      return parse(name);
    } catch (const std::invalid_argument& e) {
      fail(node, field, e.what());
    }
  }

  static std::string join(const std::string& a, const std::string& b) {
    return a.empty() ? b : a + "." + b;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

RobotParams read_params(const Reader& rd, const YAML::Node& node, const std::string& field,
                        RobotParams p) {
  rd.only_keys(node, field,
               {"wheel_radius", "half_axle", "offset", "enclosing_radius", "max_wheel_accel",
                "min_wheel_accel", "max_point_accel"});
  rd.read(node, "wheel_radius", field, p.wheel_radius);
  rd.read(node, "half_axle", field, p.half_axle);
  rd.read(node, "offset", field, p.offset);
  rd.read(node, "enclosing_radius", field, p.enclosing_radius);
  rd.read(node, "max_wheel_accel", field, p.max_wheel_accel);
  if (node["max_wheel_accel"] && !node["min_wheel_accel"]) p.min_wheel_accel = -p.max_wheel_accel;
  rd.read(node, "min_wheel_accel", field, p.min_wheel_accel);
  rd.read(node, "max_point_accel", field, p.max_point_accel);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    rd.fail(node, field, e.what());
  }
  return p;
}

Trajectory read_trajectory(const Reader& rd, const YAML::Node& node, const std::string& field) {
  rd.only_keys(node, field,
               {"kind", "start", "goal", "speed", "direction", "amplitude", "wavelength",
                "center", "radius", "angular_speed", "phase_deg"});
  if (!node["kind"]) rd.fail(node, field + ".kind", "missing");
  const Trajectory::Kind kind = rd.choice(node["kind"], field + ".kind", parse_trajectory_kind);
  Vec2 start = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  Vec2 direction = Vec2::UnitX();
  Vec2 center = Vec2::Zero();
  double speed = 0.0, amplitude = 0.0, wavelength = 1.0, radius = 1.0, angular = 0.0,
         phase = 0.0;
  rd.read(node, "start", field, start);
  rd.read(node, "goal", field, goal);
  rd.read(node, "direction", field, direction);
  rd.read(node, "center", field, center);
  rd.read(node, "speed", field, speed);
  rd.read(node, "amplitude", field, amplitude);
  rd.read(node, "wavelength", field, wavelength);
  rd.read(node, "radius", field, radius);
  rd.read(node, "angular_speed", field, angular);
  rd.read_deg(node, "phase_deg", field, phase);
  switch (kind) {
    case Trajectory::Kind::Line: return Trajectory::line(start, goal, speed);
    case Trajectory::Kind::Sine:
      if (direction.norm() == 0.0) rd.fail(node["direction"], field + ".direction", "must be nonzero");
      return Trajectory::sine(start, direction, speed, amplitude, wavelength);
    case Trajectory::Kind::Circle: return Trajectory::circle(center, radius, angular, phase);
    case Trajectory::Kind::Hold: return Trajectory::hold(start);
  }
  return Trajectory::hold(start);
}

void read_robots(const Reader& rd, const YAML::Node& node, const ConfigOverrides& ov,
                 ScenarioConfig& cfg) {
  const std::string field = "robots";
  rd.only_keys(node, field, {"layout", "count", "radius", "speed", "distance", "params", "list"});
  RobotParams params;
  if (node["params"]) params = read_params(rd, node["params"], "robots.params", params);

  std::string layout = node["list"] ? "list" : "circle";
  if (node["layout"]) layout = rd.text(node["layout"], "robots.layout");

  if (layout == "list") {
    if (ov.count) rd.fail(node, "robots.count", "a robot list cannot be resized by a sweep");
    const YAML::Node list = node["list"];
    if (!list || !list.IsSequence() || list.size() == 0)
      rd.fail(node, "robots.list", "expected a non-empty sequence");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string f = "robots.list[" + std::to_string(k) + "]";
      const YAML::Node entry = list[k];
      rd.only_keys(entry, f, {"trajectory", "initial_position", "initial_heading_deg", "params"});
      RobotSpec spec;
      spec.params = entry["params"] ? read_params(rd, entry["params"], f + ".params", params)
                                    : params;
      if (!entry["trajectory"]) rd.fail(entry, f + ".trajectory", "missing");
      spec.trajectory = read_trajectory(rd, entry["trajectory"], f + ".trajectory");
      if (entry["initial_position"])
        spec.initial_position = rd.vec2(entry["initial_position"], f + ".initial_position");
      if (entry["initial_heading_deg"])
        spec.initial_heading =
            rd.number(entry["initial_heading_deg"], f + ".initial_heading_deg") * kDeg;
      cfg.robots.push_back(spec);
    }
    return;
  }

  int count = 10;
  double radius = 6.0, speed = 1.0, distance = 2.24;
  rd.read(node, "count", field, count);
  rd.read(node, "radius", field, radius);
  rd.read(node, "speed", field, speed);
  rd.read(node, "distance", field, distance);
  if (ov.count) count = *ov.count;
  if (count < 1) rd.fail(node["count"], "robots.count", "must be >= 1");
  if (!(speed > 0.0)) rd.fail(node["speed"], "robots.speed", "must be > 0");
  if (!(radius > 0.0)) rd.fail(node["radius"], "robots.radius", "must be > 0");
  if (!(distance > 0.0)) rd.fail(node["distance"], "robots.distance", "must be > 0");
  ScenarioConfig generated;
  if (layout == "circle") {
    generated = circle_scenario(count, radius, speed, params);
  } else if (layout == "obstacles") {
    generated = obstacle_scenario(count, radius, speed, params);
  } else if (layout == "swap") {
    generated = swap_scenario(count, distance, speed, params);
  } else {
    rd.fail(node["layout"], "robots.layout",
            "unknown layout '" + layout + "' (circle, obstacles, swap, list)");
  }
  cfg.robots = generated.robots;
  cfg.obstacles = generated.obstacles;
  cfg.name = generated.name;
}

void read_gains(const Reader& rd, const YAML::Node& node, ScenarioConfig& cfg) {
  const std::string field = "gains";
  rd.only_keys(node, field,
               {"kappa1", "kappa2", "kappa3", "kappa4", "zeta", "q_deg", "varsigma", "rho",
                "sigma", "margin", "sensing_range", "hold_margin"});
  rd.read(node, "kappa1", field, cfg.safety.kappa1);
  rd.read(node, "kappa2", field, cfg.safety.kappa2);
  rd.read(node, "varsigma", field, cfg.safety.varsigma);
  rd.read(node, "rho", field, cfg.safety.rho);
  rd.read(node, "sigma", field, cfg.safety.sigma);
  rd.read(node, "margin", field, cfg.safety.margin);
  rd.read(node, "sensing_range", field, cfg.safety.sensing_range);
  rd.read(node, "hold_margin", field, cfg.safety.hold_margin);
  rd.read(node, "kappa3", field, cfg.tracking.kappa3);
  rd.read(node, "kappa4", field, cfg.tracking.kappa4);
  rd.read(node, "zeta", field, cfg.tracking.zeta);
  rd.read_deg(node, "q_deg", field, cfg.tracking.q);
  try {
    cfg.safety.validate();
  } catch (const std::invalid_argument& e) {
    rd.fail(node, field, e.what());
  }
  try {
    cfg.tracking.validate();
  } catch (const std::invalid_argument& e) {
    rd.fail(node, field, e.what());
  }
}

void read_strategy(const Reader& rd, const YAML::Node& node, ScenarioConfig& cfg) {
  const std::string field = "strategy";
  rd.only_keys(node, field,
               {"ca", "deadlock", "detector", "thresholds", "distance_mod_hysteresis"});
  if (node["ca"]) cfg.ca = rd.choice(node["ca"], "strategy.ca", parse_ca_strategy);
  if (node["deadlock"])
    cfg.deadlock = rd.choice(node["deadlock"], "strategy.deadlock", parse_deadlock_strategy);
  if (node["detector"])
    cfg.detector = rd.choice(node["detector"], "strategy.detector", parse_deadlock_detector);
  rd.read(node, "distance_mod_hysteresis", field, cfg.distance_mod_hysteresis);
  if (const YAML::Node t = node["thresholds"]) {
    const std::string f = "strategy.thresholds";
    rd.only_keys(t, f,
                 {"speed", "preferred_speed", "dwell_displacement", "dwell_time",
                  "goal_distance", "heading_angle_deg"});
    rd.read(t, "speed", f, cfg.thresholds.speed);
    rd.read(t, "preferred_speed", f, cfg.thresholds.preferred_speed);
    rd.read(t, "dwell_displacement", f, cfg.thresholds.dwell_displacement);
    rd.read(t, "dwell_time", f, cfg.thresholds.dwell_time);
    rd.read(t, "goal_distance", f, cfg.thresholds.goal_distance);
    rd.read_deg(t, "heading_angle_deg", f, cfg.thresholds.heading_angle);
  }
}

void read_sim(const Reader& rd, const YAML::Node& node, ScenarioConfig& cfg) {
  const std::string field = "sim";
  rd.only_keys(node, field,
               {"name", "dt", "total_time", "seed", "velocity_mode", "max_wheel_speed",
                "decentralized", "obstacles", "solver"});
  if (node["name"]) cfg.name = rd.text(node["name"], "sim.name");
  rd.read(node, "dt", field, cfg.dt);
  rd.read(node, "total_time", field, cfg.total_time);
  if (const YAML::Node s = node["seed"]) {
    try {
      cfg.seed = s.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      rd.fail(s, "sim.seed", "expected a non-negative integer");
    }
  }
  rd.read(node, "velocity_mode", field, cfg.velocity_mode);
  rd.read(node, "max_wheel_speed", field, cfg.max_wheel_speed);
  rd.read(node, "decentralized", field, cfg.decentralized);
  if (const YAML::Node obs = node["obstacles"]) {
    if (!obs.IsSequence()) rd.fail(obs, "sim.obstacles", "expected a sequence");
    cfg.obstacles.clear();
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const std::string f = "sim.obstacles[" + std::to_string(k) + "]";
      rd.only_keys(obs[k], f, {"center", "radius"});
      Obstacle o;
      rd.read(obs[k], "center", f, o.center);
      rd.read(obs[k], "radius", f, o.radius);
      if (!(o.radius > 0.0)) rd.fail(obs[k], f + ".radius", "must be > 0");
      cfg.obstacles.push_back(o);
    }
  }
  if (const YAML::Node s = node["solver"]) {
    const std::string f = "sim.solver";
    rd.only_keys(s, f,
                 {"epsilon", "step", "inner_iterations", "inner_tol", "warm_start",
                  "feasibility_tol", "fallback_brake", "rescue_iterations", "rescue_tol", "eta_floor"});
    rd.read(s, "epsilon", f, cfg.solver.epsilon);
    rd.read(s, "step", f, cfg.solver.step);
    rd.read(s, "inner_iterations", f, cfg.solver.inner_iterations);
    rd.read(s, "inner_tol", f, cfg.solver.inner_tol);
    rd.read(s, "warm_start", f, cfg.solver.warm_start);
    rd.read(s, "feasibility_tol", f, cfg.solver.feasibility_tol);
    rd.read(s, "fallback_brake", f, cfg.solver.fallback_brake);
    rd.read(s, "rescue_iterations", f, cfg.solver.rescue_iterations);
    rd.read(s, "rescue_tol", f, cfg.solver.rescue_tol);
    rd.read(s, "eta_floor", f, cfg.solver.eta_floor);
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& source,
                            const ConfigOverrides& overrides) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, "", e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source, 0, "", "expected a mapping at the top level");
  rd.only_keys(root, "", {"robots", "gains", "strategy", "sim"});
  if (!root["robots"]) throw ConfigError(source, 0, "robots", "section is required");

  ScenarioConfig cfg;
  // Gains and strategy first so that generated layouts do not reset them.
  if (root["gains"]) read_gains(rd, root["gains"], cfg);
  if (root["strategy"]) read_strategy(rd, root["strategy"], cfg);
  read_robots(rd, root["robots"], overrides, cfg);
  if (root["sim"]) read_sim(rd, root["sim"], cfg);
  if (overrides.ca) cfg.ca = *overrides.ca;
  if (overrides.deadlock) cfg.deadlock = *overrides.deadlock;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, 0, "", e.what());
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in)
    throw std::system_error(errno ? errno : ENOENT, std::generic_category(),
                            "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), overrides);
}

}  // namespace soatt
