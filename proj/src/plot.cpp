#include "soatt/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace soatt {

namespace {

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Frame {
  double min_x, max_y, scale;
  double x(double wx) const { return (wx - min_x) * scale; }
  double y(double wy) const { return (max_y - wy) * scale; }
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const SimTrace& trace, const PlotOptions& opt) {
  if (trace.steps.empty()) throw std::invalid_argument("render_svg: trace has no steps");
  const int n = trace.num_robots;

  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  auto grow = [&](const Vec2& p, double r) {
    lo_x = std::min(lo_x, p.x() - r);
    hi_x = std::max(hi_x, p.x() + r);
    lo_y = std::min(lo_y, p.y() - r);
    hi_y = std::max(hi_y, p.y() + r);
  };
  for (const StepRecord& s : trace.steps) {
    for (int r = 0; r < n; ++r) {
      grow(s.states[static_cast<std::size_t>(r)].position, 0.0);
      grow(s.ref_positions[static_cast<std::size_t>(r)], 0.0);
    }
  }
  for (const Vec2& p : trace.initial_positions) grow(p, 0.0);
  for (const Obstacle& o : trace.obstacles) grow(o.center, o.radius);
  lo_x -= opt.margin;
  lo_y -= opt.margin;
  hi_x += opt.margin;
  hi_y += opt.margin;
  const double span_x = std::max(hi_x - lo_x, 1e-6);
  const double span_y = std::max(hi_y - lo_y, 1e-6);
  const Frame f{lo_x, hi_y, opt.width / span_x};
  const double height = span_y * f.scale;
  const double stroke = std::max(1.0, opt.width / 600.0);
  const double marker = std::max(3.0, 0.12 * f.scale);

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << opt.width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    svg << "<title>" << escape(opt.title) << "</title>\n";

  for (const Obstacle& o : trace.obstacles) {
    svg << "<circle class=\"obstacle\" cx=\"" << f.x(o.center.x()) << "\" cy=\""
        << f.y(o.center.y()) << "\" r=\"" << o.radius * f.scale
        << "\" fill=\"#cccccc\" stroke=\"#555555\"/>\n";
  }

  // Drop points closer than half a pixel to the previous one.
  auto polyline = [&](int r, bool desired) {
    svg << "<polyline class=\"" << (desired ? "desired" : "actual") << "\" fill=\"none\" stroke=\""
        << kPalette[static_cast<std::size_t>(r) % kPalette.size()] << "\" stroke-width=\""
        << (desired ? stroke : 1.5 * stroke) << '"';
    if (desired) svg << " stroke-dasharray=\"" << 4 * stroke << ',' << 3 * stroke << '"';
    svg << " points=\"";
    double px = -1e300, py = -1e300;
    auto point = [&](const Vec2& p) {
      const double x = f.x(p.x()), y = f.y(p.y());
      if (std::hypot(x - px, y - py) < 0.5) return;
      svg << x << ',' << y << ' ';
      px = x;
      py = y;
    };
    const auto ru = static_cast<std::size_t>(r);
    if (!desired && ru < trace.initial_positions.size()) point(trace.initial_positions[ru]);
    for (const StepRecord& s : trace.steps)
      point(desired ? s.ref_positions[ru] : s.states[ru].position);
    svg << "\"/>\n";
  };
  for (int r = 0; r < n; ++r) polyline(r, true);
  for (int r = 0; r < n; ++r) polyline(r, false);

  for (int r = 0; r < n; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    const char* color = kPalette[ru % kPalette.size()];
    const Vec2 start = ru < trace.initial_positions.size() ? trace.initial_positions[ru]
                                                          : trace.steps.front().states[ru].position;
    const Vec2 end = trace.steps.back().states[ru].position;
    svg << "<circle class=\"start\" cx=\"" << f.x(start.x()) << "\" cy=\"" << f.y(start.y())
        << "\" r=\"" << marker << "\" fill=\"white\" stroke=\"" << color
        << "\" stroke-width=\"" << stroke << "\"/>\n";
    svg << "<rect class=\"end\" x=\"" << f.x(end.x()) - marker << "\" y=\""
        << f.y(end.y()) - marker << "\" width=\"" << 2 * marker << "\" height=\"" << 2 * marker
        << "\" fill=\"" << color << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace soatt
