#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace toxsim {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (week, value)
};

// Deterministic SVG line chart: weeks on x, values on y, one polyline per
// series, legend from labels. Byte-stable for identical inputs.
void emit_plot(const std::vector<PlotSeries>& series, std::ostream& out);

}  // namespace toxsim
