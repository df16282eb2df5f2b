#pragma once

#include <string>

#include "soatt/simulator.hpp"

namespace soatt {

struct PlotOptions {
  int width = 800;  // pixels; height follows the data aspect ratio
  double margin = 0.5;  // metres of padding around the data
  std::string title;
};

/// SVG with desired paths dashed, actual paths solid, obstacles as grey
/// circles, a hollow circle at each start and a filled square at each end.
/// Throws std::invalid_argument for a trace without steps.
std::string render_svg(const SimTrace& trace, const PlotOptions& options = {});

}  // namespace soatt
