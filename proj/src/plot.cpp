#include "toxsim/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace toxsim {

namespace {

constexpr double kWidth = 880.0;
constexpr double kHeight = 560.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 648.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 500.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void emit_plot(const std::vector<PlotSeries>& series, std::ostream& out) {
  if (series.empty()) throw std::invalid_argument("plot needs at least one series");
  for (const PlotSeries& s : series)
    if (s.points.empty()) throw std::invalid_argument("plot series must be non-empty");

  double x_min = series[0].points[0].first, x_max = x_min;
  double y_min = 0.0, y_max = series[0].points[0].second;
  for (const PlotSeries& s : series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_max = std::max(y_max, y);
    }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;
  y_max *= 1.05;

  auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft); };
  auto sy = [&](double y) { return kBottom - (y - y_min) / (y_max - y_min) * (kBottom - kTop); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\""
      << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << ' ' << fmt(kHeight) << "\">\n";
  out << "<rect width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
      << "\" fill=\"white\"/>\n";

  // Axes.
  out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kBottom) << "\" x2=\"" << fmt(kRight)
      << "\" y2=\"" << fmt(kBottom) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(kLeft)
      << "\" y2=\"" << fmt(kBottom) << "\" stroke=\"black\"/>\n";

  // y ticks.
  for (int i = 0; i <= 5; ++i) {
    const double y = y_min + (y_max - y_min) * i / 5.0;
    const double py = sy(y);
    out << "<line x1=\"" << fmt(kLeft - 4) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(kLeft)
        << "\" y2=\"" << fmt(py) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(py + 4)
        << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">" << fmt4(y)
        << "</text>\n";
  }

  // x ticks at integer weeks, thinned when crowded.
  const int x_lo = static_cast<int>(std::ceil(x_min));
  const int x_hi = static_cast<int>(std::floor(x_max));
  const int span = std::max(1, x_hi - x_lo);
  const int stride = span > 16 ? (span + 15) / 16 : 1;
  for (int w = x_lo; w <= x_hi; w += stride) {
    const double px = sx(w);
    out << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(kBottom) << "\" x2=\"" << fmt(px)
        << "\" y2=\"" << fmt(kBottom + 4) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(kBottom + 18)
        << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">" << w
        << "</text>\n";
  }
  out << "<text x=\"" << fmt((kLeft + kRight) / 2) << "\" y=\"" << fmt(kBottom + 40)
      << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">week</text>\n";
  out << "<text x=\"18\" y=\"" << fmt((kTop + kBottom) / 2)
      << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 18 "
      << fmt((kTop + kBottom) / 2) << ")\">mean toxicity</text>\n";

  // Series polylines and point markers.
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPaletteSize];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[i].points) out << fmt(sx(x)) << ',' << fmt(sy(y)) << ' ';
    out << "\"/>\n";
    for (const auto& [x, y] : series[i].points)
      out << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y))
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
  }

  // Legend.
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPaletteSize];
    const double ly = kTop + 16.0 * static_cast<double>(i);
    out << "<line x1=\"" << fmt(kRight + 16) << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << fmt(kRight + 40) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(kRight + 46) << "\" y=\"" << fmt(ly + 4)
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << escape_xml(series[i].label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace toxsim
