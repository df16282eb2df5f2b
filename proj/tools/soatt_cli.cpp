// soatt: run scenarios or sweeps, write traces, metrics and plots.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "soatt/config.hpp"
#include "soatt/metrics.hpp"
#include "soatt/plot.hpp"
#include "soatt/trace_io.hpp"

namespace fs = std::filesystem;
using namespace soatt;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kIo = 4 };

constexpr const char* kDefaultScenario =
    "robots:\n  layout: circle\n  count: 10\n  radius: 6\n  speed: 1.2\n"
    "gains:\n  hold_margin: 0.1\n"
    "sim:\n  total_time: 15\n  solver:\n    step: 0.0005\n    inner_iterations: 300\n"
    "    inner_tol: 1.0e-9\n    fallback_brake: false\n";

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Job {
  ConfigOverrides overrides;
  std::string label;  // subdirectory; empty for a single run
};

struct Outcome {
  int code = kOk;
  std::string message;
  std::optional<MetricsReport> report;
  double d_safe = 0.0;
};

std::vector<std::string> split(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double scenario_d_safe(const ScenarioConfig& cfg) {
  double r = cfg.robots.front().params.enclosing_radius;
  for (const RobotSpec& s : cfg.robots) r = std::min(r, s.params.enclosing_radius);
  return 2.0 * r + cfg.safety.margin;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

Outcome run_one(const std::string& config_text, const std::string& source, const Job& job,
                const fs::path& dir, const std::set<std::string>& emit) {
  Outcome o;
  ScenarioConfig cfg;
  try {
    cfg = parse_config(config_text, source, job.overrides);
  } catch (const ConfigError& e) {
    o.code = kConfig;
    o.message = e.what();
    return o;
  }
  SimTrace trace;
  try {
    trace = run(cfg);
  } catch (const SimulationError& e) {
    o.code = kSolver;
    o.message = e.what();
    return o;
  }
  o.d_safe = scenario_d_safe(cfg);
  o.report = compute_report(trace, o.d_safe);
  try {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const TraceFiles files = TraceFiles::in(dir);
    if (emit.count("trace")) {
      write_file(files.trace, [&](std::ostream& s) { write_trace_csv(s, trace); });
      write_file(files.multipliers, [&](std::ostream& s) { write_multipliers_csv(s, trace); });
      write_file(files.meta, [&](std::ostream& s) { write_trace_meta(s, trace); });
    }
    if (emit.count("metrics"))
      write_file(dir / "metrics.csv", [&](std::ostream& s) { write_metrics_csv(s, *o.report); });
    if (emit.count("plot")) {
      PlotOptions opt;
      opt.title = cfg.name;
      const std::string svg = render_svg(trace, opt);
      write_file(dir / "trajectories.svg", [&](std::ostream& s) { s << svg; });
    }
  } catch (const IoError& e) {
    o.code = kIo;
    o.message = e.what();
  }
  return o;
}

int cmd_run(const std::string& config_path, const fs::path& out_dir,
            const std::vector<std::string>& counts, const std::vector<std::string>& strategies,
            const std::vector<std::string>& deadlocks, int jobs_limit,
            std::vector<std::string> emit_list) {
  std::string text = kDefaultScenario;
  std::string source = "<default circle>";
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open " << config_path << "\n";
      return kIo;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
    source = config_path;
  }
  if (emit_list.empty()) emit_list = {"trace", "metrics", "plot"};
  const std::set<std::string> emit(emit_list.begin(), emit_list.end());

  // Parse every axis value up front so a typo fails before any run starts.
  std::vector<std::optional<int>> ns{std::nullopt};
  std::vector<std::optional<CaStrategy>> cas{std::nullopt};
  std::vector<std::optional<DeadlockStrategy>> dls{std::nullopt};
  try {
    if (!counts.empty()) {
      ns.clear();
      for (const auto& c : counts) {
        std::size_t used = 0;
        const int v = std::stoi(c, &used);
        if (used != c.size() || v < 1) throw std::invalid_argument("bad robot count '" + c + "'");
        ns.push_back(v);
      }
    }
    if (!strategies.empty()) {
      cas.clear();
      for (const auto& s : strategies) cas.push_back(parse_ca_strategy(s));
    }
    if (!deadlocks.empty()) {
      dls.clear();
      for (const auto& s : deadlocks) dls.push_back(parse_deadlock_strategy(s));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }

  std::vector<Job> jobs;
  for (const auto& n : ns)
    for (const auto& ca : cas)
      for (const auto& dl : dls) {
        Job j;
        j.overrides = {n, ca, dl};
        std::string label;
        if (n) label += "n" + std::to_string(*n);
        if (ca) label += std::string(label.empty() ? "" : "_") + std::string(to_string(*ca));
        if (dl) label += std::string(label.empty() ? "" : "_") + std::string(to_string(*dl));
        j.label = label;
        jobs.push_back(j);
      }
  const bool sweep = jobs.size() > 1;
  if (!sweep) jobs.front().label.clear();

  std::vector<Outcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const fs::path dir = jobs[k].label.empty() ? out_dir : out_dir / jobs[k].label;
      outcomes[k] = run_one(text, source, jobs[k], dir, emit);
      std::lock_guard<std::mutex> lock(log_mutex);
      const Outcome& o = outcomes[k];
      const std::string name = jobs[k].label.empty() ? std::string("run") : jobs[k].label;
      if (o.code != kOk) {
        std::cerr << name << ": error: " << o.message << "\n";
      } else {
        std::cerr << name << ": min distance " << std::setprecision(6)
                  << o.report->safety.min_distance << ", violations "
                  << o.report->safety.violations << ", rmse " << o.report->proximity.rmse
                  << "\n";
      }
    }
  };
  const int threads = std::clamp(jobs_limit, 1, static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kOk;
  for (const Outcome& o : outcomes)
    if (o.code != kOk) {
      code = o.code;
      break;
    }

  if (sweep) {
    try {
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (ec) throw IoError("cannot create " + out_dir.string());
      write_file(out_dir / "summary.csv", [&](std::ostream& s) {
        s << "run,status,min_pairwise_distance,safety_violations,rmse,mae,std_dev,"
             "intervention_time,goals_reached,feasibility_events\n";
        s << std::setprecision(9);
        for (std::size_t k = 0; k < jobs.size(); ++k) {
          const Outcome& o = outcomes[k];
          s << jobs[k].label << ',' << o.code;
          if (o.report) {
            const MetricsReport& r = *o.report;
            s << ',' << r.safety.min_distance << ',' << r.safety.violations << ','
              << r.proximity.rmse << ',' << r.proximity.mae << ',' << r.proximity.std_dev << ','
              << r.intervention.mean << ',' << r.goals_reached << ',' << r.feasibility_events;
          } else {
            s << ",,,,,,,,";
          }
          s << '\n';
        }
      });
    } catch (const IoError& e) {
      std::cerr << "error: " << e.what() << "\n";
      if (code == kOk) code = kIo;
    }
  }
  return code;
}

int cmd_plot(const fs::path& trace_path, fs::path out_path) {
  SimTrace trace;
  try {
    trace = load_trace(trace_path);
  } catch (const TraceFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::system_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  if (out_path.empty()) out_path = trace_path.parent_path() / "trajectories.svg";
  std::string svg;
  try {
    svg = render_svg(trace);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  try {
    write_file(out_path, [&](std::ostream& s) { s << svg; });
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot collision avoidance and trajectory tracking simulator"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run a scenario or a sweep");
  std::string config_path;
  std::string out_dir = "results";
  std::string sweep_n, strategy, deadlock;
  int jobs = 1;
  std::vector<std::string> emit;
  run_cmd->add_option("--config", config_path, "Scenario file (YAML)");
  run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run_cmd->add_option("--sweep-n", sweep_n, "Robot counts, comma separated");
  run_cmd->add_option("--strategy", strategy, "Collision-avoidance strategies, comma separated");
  run_cmd->add_option("--deadlock", deadlock, "Deadlock strategies, comma separated");
  run_cmd->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  run_cmd->add_option("--emit", emit, "trace, metrics or plot (repeatable)")
      ->check(CLI::IsMember({"trace", "metrics", "plot"}))
      ->take_all()
      ->allow_extra_args(false);

  auto* plot_cmd = app.add_subcommand("plot", "Render a trace as SVG");
  std::string trace_path, plot_out;
  plot_cmd->add_option("--trace", trace_path, "trace.csv")->required();
  plot_cmd->add_option("--out", plot_out, "SVG path (default: next to the trace)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }

  if (*run_cmd)
    return cmd_run(config_path, out_dir, split(sweep_n), split(strategy), split(deadlock), jobs,
                   emit);
  return cmd_plot(trace_path, plot_out);
}
