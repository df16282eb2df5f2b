#include "soatt/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

namespace soatt {

TraceFormatError::TraceFormatError(const std::string& source, int line_,
                                   const std::string& message)
    : std::runtime_error(source + (line_ > 0 ? ":" + std::to_string(line_) : "") + ": " +
                         message),
      line(line_) {}

namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {
    out_ << std::setprecision(9);
  }
  Writer& num(double v) {
    sep();
    out_ << v;
    return *this;
  }
  Writer& integer(long long v) {
    sep();
    out_ << v;
    return *this;
  }
  void end() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostream& out_;
  bool first_ = true;
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class Fields {
 public:
  Fields(const std::string& source, int line, std::string_view text, std::size_t expected)
      : source_(source), line_(line), cells_(split(text)) {
    if (cells_.size() != expected)
      throw TraceFormatError(source_, line_,
                             "expected " + std::to_string(expected) + " columns, found " +
                                 std::to_string(cells_.size()));
  }
  double num(std::size_t k) const {
    double v = 0.0;
    const std::string_view c = cells_[k];
    const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
    if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
      // from_chars rejects "inf"/"nan" spellings produced by some streams.
      if (c == "inf") return std::numeric_limits<double>::infinity();
      if (c == "-inf") return -std::numeric_limits<double>::infinity();
      throw TraceFormatError(source_, line_, "bad number '" + std::string(c) + "'");
    }
    return v;
  }
  long long integer(std::size_t k) const {
    long long v = 0;
    const std::string_view c = cells_[k];
    const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
    if (res.ec != std::errc() || res.ptr != c.data() + c.size())
      throw TraceFormatError(source_, line_, "bad integer '" + std::string(c) + "'");
    return v;
  }
  bool flag(std::size_t k) const {
    const long long v = integer(k);
    if (v != 0 && v != 1) throw TraceFormatError(source_, line_, "flag must be 0 or 1");
    return v == 1;
  }

 private:
  const std::string& source_;
  int line_;
  std::vector<std::string_view> cells_;
};

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  out << kTraceHeader << '\n';
  Writer w(out);
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const StepRecord& s = trace.steps[k];
    for (std::size_t r = 0; r < s.states.size(); ++r) {
      const RobotState& st = s.states[r];
      const Vec2 udot = r < s.applied_accel.size() ? s.applied_accel[r] : st.wheel_accel;
      w.integer(static_cast<long long>(k))
          .num(s.time)
          .integer(static_cast<long long>(r))
          .num(st.position.x())
          .num(st.position.y())
          .num(st.heading)
          .num(st.wheel_velocity.x())
          .num(st.wheel_velocity.y())
          .num(udot.x())
          .num(udot.y())
          .num(s.ref_positions[r].x())
          .num(s.ref_positions[r].y())
          .integer(s.zeta_active[r] ? 1 : 0)
          .integer(s.ca_active[r] ? 1 : 0);
      w.end();
    }
  }
}

void write_multipliers_csv(std::ostream& out, const SimTrace& trace) {
  out << kMultiplierHeader << '\n';
  Writer w(out);
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const StepRecord& s = trace.steps[k];
    for (std::size_t r = 0; r < s.pair_alpha.size(); ++r) {
      w.integer(static_cast<long long>(k))
          .integer(s.pair_alpha[r])
          .integer(s.pairs[r].i)
          .integer(s.pairs[r].j)
          .num(s.eta[r]);
      w.end();
    }
  }
}

void write_trace_meta(std::ostream& out, const SimTrace& trace) {
  nlohmann::json j;
  j["dt"] = trace.dt;
  j["num_robots"] = trace.num_robots;
  j["num_agents"] = trace.num_agents;
  j["robot_radii"] = trace.robot_radii;
  nlohmann::json obs = nlohmann::json::array();
  for (const Obstacle& o : trace.obstacles)
    obs.push_back({{"center", {o.center.x(), o.center.y()}}, {"radius", o.radius}});
  j["obstacles"] = obs;
  nlohmann::json starts = nlohmann::json::array();
  for (const Vec2& p : trace.initial_positions) starts.push_back({p.x(), p.y()});
  j["initial_positions"] = starts;
  j["feasibility_events"] = trace.feasibility_events;
  j["solver_iterations"] = trace.solver_iterations;
  out << j.dump(2) << '\n';
}

SimTrace read_trace(std::istream& trace_csv, std::istream* multipliers_csv,
                    std::istream* meta_json, const std::string& source) {
  SimTrace trace;
  std::string line;
  int lineno = 0;
  if (!std::getline(trace_csv, line)) throw TraceFormatError(source, 0, "empty trace");
  ++lineno;
  strip_cr(line);
  if (line != kTraceHeader) throw TraceFormatError(source, 1, "unexpected header");

  int max_robot = -1;
  while (std::getline(trace_csv, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const Fields f(source, lineno, line, 14);
    const long long step = f.integer(0);
    const long long robot = f.integer(2);
    if (step < 0 || robot < 0) throw TraceFormatError(source, lineno, "negative index");
    const auto k = static_cast<std::size_t>(step);
    if (k > trace.steps.size()) throw TraceFormatError(source, lineno, "steps out of order");
    if (k == trace.steps.size()) {
      trace.steps.emplace_back();
      trace.steps.back().time = f.num(1);
    }
    StepRecord& s = trace.steps[k];
    if (static_cast<std::size_t>(robot) != s.states.size())
      throw TraceFormatError(source, lineno, "robot ids must be consecutive within a step");
    RobotState st;
    st.position = {f.num(3), f.num(4)};
    st.heading = f.num(5);
    st.wheel_velocity = {f.num(6), f.num(7)};
    st.wheel_accel = {f.num(8), f.num(9)};
    s.states.push_back(st);
    s.applied_accel.push_back(st.wheel_accel);
    s.ref_positions.emplace_back(f.num(10), f.num(11));
    s.zeta_active.push_back(f.flag(12));
    s.ca_active.push_back(f.flag(13));
    max_robot = std::max(max_robot, static_cast<int>(robot));
  }
  if (trace.steps.empty()) throw TraceFormatError(source, 0, "trace has no rows");
  trace.num_robots = max_robot + 1;
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    if (trace.steps[k].states.size() != static_cast<std::size_t>(trace.num_robots))
      throw TraceFormatError(source, 0, "step " + std::to_string(k) + " is missing robots");
  }
  trace.num_agents = trace.num_robots;
  trace.dt = trace.steps.front().time;
  for (const RobotState& st : trace.steps.front().states)
    trace.initial_positions.push_back(st.position);

  if (multipliers_csv) {
    const std::string msource = source + " (multipliers)";
    int mline = 0;
    if (!std::getline(*multipliers_csv, line)) throw TraceFormatError(msource, 0, "empty file");
    ++mline;
    strip_cr(line);
    if (line != kMultiplierHeader) throw TraceFormatError(msource, 1, "unexpected header");
    while (std::getline(*multipliers_csv, line)) {
      ++mline;
      strip_cr(line);
      if (line.empty()) continue;
      const Fields f(msource, mline, line, 5);
      const long long step = f.integer(0);
      if (step < 0 || static_cast<std::size_t>(step) >= trace.steps.size())
        throw TraceFormatError(msource, mline, "step out of range");
      StepRecord& s = trace.steps[static_cast<std::size_t>(step)];
      s.pair_alpha.push_back(f.integer(1));
      s.pairs.push_back({static_cast<int>(f.integer(2)), static_cast<int>(f.integer(3))});
      s.eta.push_back(f.num(4));
      trace.num_agents = std::max(trace.num_agents, s.pairs.back().j + 1);
    }
  }

  if (meta_json) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(*meta_json);
      trace.dt = j.at("dt").get<double>();
      trace.num_agents = j.value("num_agents", trace.num_agents);
      trace.robot_radii = j.value("robot_radii", std::vector<double>{});
      for (const auto& o : j.value("obstacles", nlohmann::json::array())) {
        const auto c = o.at("center").get<std::vector<double>>();
        if (c.size() != 2) throw TraceFormatError(source, 0, "obstacle center needs 2 values");
        trace.obstacles.push_back({Vec2(c[0], c[1]), o.at("radius").get<double>()});
      }
      trace.initial_positions.clear();
      for (const auto& p : j.value("initial_positions", nlohmann::json::array())) {
        const auto c = p.get<std::vector<double>>();
        if (c.size() != 2) throw TraceFormatError(source, 0, "position needs 2 values");
        trace.initial_positions.emplace_back(c[0], c[1]);
      }
      trace.feasibility_events = j.value("feasibility_events", 0);
      trace.solver_iterations = j.value("solver_iterations", std::int64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw TraceFormatError(source + " (meta)", 0, e.what());
    }
    if (trace.num_agents < trace.num_robots)
      throw TraceFormatError(source + " (meta)", 0, "num_agents below robot count");
  }
  if (trace.robot_radii.empty()) trace.robot_radii.assign(static_cast<std::size_t>(trace.num_robots), 0.0);
  if (trace.robot_radii.size() != static_cast<std::size_t>(trace.num_robots))
    throw TraceFormatError(source + " (meta)", 0, "robot_radii length differs from robot count");
  return trace;
}

TraceFiles TraceFiles::in(const std::filesystem::path& dir) {
  return {dir / "trace.csv", dir / "multipliers.csv", dir / "trace_meta.json"};
}

SimTrace load_trace(const std::filesystem::path& trace_csv) {
  std::ifstream in(trace_csv);
  if (!in) throw std::system_error(ENOENT, std::generic_category(), "cannot open " + trace_csv.string());
  const TraceFiles files = TraceFiles::in(trace_csv.parent_path());
  std::ifstream mult(files.multipliers);
  std::ifstream meta(files.meta);
  return read_trace(in, mult ? &mult : nullptr, meta ? &meta : nullptr, trace_csv.string());
}

void write_metrics_csv(std::ostream& out, const MetricsReport& rep) {
  out << "key,value\n" << std::setprecision(9);
  auto kv = [&out](const std::string& key, auto value) { out << key << ',' << value << '\n'; };
  kv("rmse", rep.proximity.rmse);
  kv("mae", rep.proximity.mae);
  kv("std_dev", rep.proximity.std_dev);
  kv("intervention_time", rep.intervention.mean);
  kv("min_pairwise_distance", rep.safety.min_distance);
  kv("safety_violations", rep.safety.violations);
  kv("first_violation_step", rep.safety.first_violation_step);
  kv("min_obstacle_clearance", rep.safety.min_obstacle_clearance);
  kv("obstacle_violations", rep.safety.obstacle_violations);
  kv("goals_reached", rep.goals_reached);
  kv("feasibility_events", rep.feasibility_events);
  kv("deadlock_events", rep.deadlocks.size());
  kv("horizon", rep.horizon);
  for (std::size_t r = 0; r < rep.per_robot_proximity.size(); ++r) {
    const std::string p = "robot." + std::to_string(r) + ".";
    kv(p + "rmse", rep.per_robot_proximity[r].rmse);
    kv(p + "mae", rep.per_robot_proximity[r].mae);
    kv(p + "std_dev", rep.per_robot_proximity[r].std_dev);
    kv(p + "intervention_time", rep.intervention.per_robot[r]);
    kv(p + "final_error", rep.final_error[r]);
    if (r < rep.per_robot_safety.size()) {
      kv(p + "min_pairwise_distance", rep.per_robot_safety[r].min_distance);
      kv(p + "safety_violations", rep.per_robot_safety[r].violations);
    }
  }
  for (std::size_t e = 0; e < rep.deadlocks.size(); ++e) {
    const std::string p = "deadlock." + std::to_string(e) + ".";
    kv(p + "robot", rep.deadlocks[e].robot);
    kv(p + "start", rep.deadlocks[e].start);
    kv(p + "end", rep.deadlocks[e].end);
  }
}

}  // namespace soatt
