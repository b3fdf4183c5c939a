#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "causal/error.hpp"

namespace causal {

struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

} // namespace detail

/// Minimal hand-rolled overlay line chart, enough for the density curves.
inline void write_line_chart_svg(const std::string& path, const std::string& title,
                                 const std::string& x_label, const std::string& y_label,
                                 const std::vector<SvgSeries>& series) {
  if (series.empty()) throw ValidationError("write_line_chart_svg: no series");
  const double width = 760, height = 480;
  const double left = 70, right = 30, top = 50, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double x_min = series[0].x.front(), x_max = series[0].x.front();
  double y_min = 0.0, y_max = 0.0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw ValidationError("write_line_chart_svg: series " + s.label + " is malformed");
    }
    for (double v : s.x) {
      x_min = std::min(x_min, v);
      x_max = std::max(x_max, v);
    }
    for (double v : s.y) y_max = std::max(y_max, v);
  }
  if (!(x_max > x_min)) x_max = x_min + 1.0;
  if (!(y_max > y_min)) y_max = y_min + 1.0;
  y_max *= 1.05;

  auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return top + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_line_chart_svg: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  // Axes.
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = x_min + (x_max - x_min) * t / ticks;
    const double fy = y_min + (y_max - y_min) * t / ticks;
    out << "<line x1=\"" << detail::svg_num(px(fx)) << "\" y1=\"" << top + plot_h
        << "\" x2=\"" << detail::svg_num(px(fx)) << "\" y2=\"" << top + plot_h + 5
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << detail::svg_num(px(fx)) << "\" y=\"" << top + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::tick_label(fx) << "</text>\n";
    out << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::svg_num(py(fy)) << "\" x2=\""
        << left << "\" y2=\"" << detail::svg_num(py(fy)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left - 9 << "\" y=\"" << detail::svg_num(py(fy) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::tick_label(fy) << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << top + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << top + plot_h / 2 << ")\">" << y_label << "</text>\n";

  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << detail::svg_num(px(s.x[i])) << ',' << detail::svg_num(py(s.y[i])) << ' ';
    }
    out << "\"/>\n";
  }

  double legend_y = top + 8;
  for (const auto& s : series) {
    out << "<line x1=\"" << left + plot_w - 150 << "\" y1=\"" << legend_y << "\" x2=\""
        << left + plot_w - 120 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + plot_w - 112 << "\" y=\"" << legend_y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    legend_y += 18;
  }
  out << "</svg>\n";
  if (!out) throw IoError("write_line_chart_svg: write failed for " + path);
}

} // namespace causal
