#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "soatt/metrics.hpp"
#include "soatt/simulator.hpp"

namespace soatt {

class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(const std::string& source, int line, const std::string& message);
  int line;  // 1-based, 0 when not tied to a line
};

inline constexpr const char* kTraceHeader =
    "step,time,robot_id,x,y,theta,u1,u2,udot1,udot2,ref_x,ref_y,zeta_active,ca_active";
inline constexpr const char* kMultiplierHeader = "step,pair_alpha,i,j,eta";

/// One row per (step, robot); numbers carry 9 significant digits.
void write_trace_csv(std::ostream& out, const SimTrace& trace);
/// One row per (step, row of the QP) with the multiplier of that pair.
void write_multipliers_csv(std::ostream& out, const SimTrace& trace);
/// dt, robot radii, obstacles, start positions and the feasibility count,
/// which the flat rows cannot carry.
void write_trace_meta(std::ostream& out, const SimTrace& trace);

/// Rebuilds a trace from the three files written above. The multiplier and
/// meta streams may be null; missing data is left empty (radii default to
/// zero, dt is inferred from the first time stamp).
SimTrace read_trace(std::istream& trace_csv, std::istream* multipliers_csv,
                    std::istream* meta_json, const std::string& source = "<trace>");

/// File names used inside a run directory.
struct TraceFiles {
  std::filesystem::path trace;
  std::filesystem::path multipliers;
  std::filesystem::path meta;
  static TraceFiles in(const std::filesystem::path& dir);
};

/// Reads `trace.csv` and its companions (next to it, when present).
SimTrace load_trace(const std::filesystem::path& trace_csv);

/// Flat `key,value` table, one metric per line, per-robot entries last.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);

}  // namespace soatt
