#pragma once

/// @file
/// @brief Self-contained SVG line charts (no external assets), optionally
/// with logarithmic axes, laid out as a row of panels.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "cgm/error.hpp"
#include "cgm/harness/csv.hpp"

namespace cgm::harness {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = true;
  std::vector<Series> series;
};

/// One panel of a figure built from CSV columns.
struct PanelSpec {
  std::string title;
  std::string x_column = "iter";
  std::string y_column;
  bool log_x = false;
  bool log_y = true;
  bool absolute = false;  ///< plot |y|
};

struct PlotInput {
  std::string label;
  std::filesystem::path csv;
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
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

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Axis {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;

  double map(double v) const {
    const double a = log ? std::log10(v) : v;
    return (a - lo) / (hi - lo);
  }
};

inline Axis make_axis(double lo, double hi, bool log) {
  Axis axis;
  axis.log = log;
  if (log) {
    lo = std::floor(std::log10(lo));
    hi = std::ceil(std::log10(hi));
  }
  if (!(hi > lo)) {
    const double pad = log ? 1.0 : std::max(1.0, std::abs(lo)) * 0.5;
    lo -= pad;
    hi += pad;
  }
  axis.lo = lo;
  axis.hi = hi;
  return axis;
}

inline std::vector<double> ticks(const Axis& axis) {
  std::vector<double> out;
  if (axis.log) {
    const int lo = static_cast<int>(axis.lo);
    const int hi = static_cast<int>(axis.hi);
    const int stride = std::max(1, (hi - lo) / 6);
    for (int e = lo; e <= hi; e += stride) out.push_back(std::pow(10.0, e));
  } else {
    for (int k = 0; k <= 4; ++k) out.push_back(axis.lo + (axis.hi - axis.lo) * k / 4.0);
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

}  // namespace detail

/// Renders panels side by side. Points that cannot be drawn on a log axis
/// (non-positive) or are non-finite are skipped. Throws EmptySeries when a
/// panel has nothing to draw.
inline std::string render_svg(const std::vector<Panel>& panels) {
  if (panels.empty()) throw Error(ErrorCode::EmptySeries, "figure has no panels");
  constexpr double kW = 420.0, kH = 320.0, kLeft = 70.0, kRight = 15.0, kTop = 30.0,
                   kBottom = 50.0;
  const double width = kW * static_cast<double>(panels.size());

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(width) +
         "\" height=\"" + detail::num(kH) + "\" viewBox=\"0 0 " + detail::num(width) + " " +
         detail::num(kH) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    auto usable = [&](double x, double y) {
      return std::isfinite(x) && std::isfinite(y) && (!panel.log_x || x > 0.0) &&
             (!panel.log_y || y > 0.0);
    };
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    std::size_t points = 0;
    for (const auto& s : panel.series) {
      const std::size_t n = std::min(s.x.size(), s.y.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (!usable(s.x[i], s.y[i])) continue;
        xlo = std::min(xlo, s.x[i]);
        xhi = std::max(xhi, s.x[i]);
        ylo = std::min(ylo, s.y[i]);
        yhi = std::max(yhi, s.y[i]);
        ++points;
      }
    }
    if (points == 0) {
      throw Error(ErrorCode::EmptySeries, "panel '" + panel.title + "' has no drawable points");
    }
    const detail::Axis ax = detail::make_axis(xlo, xhi, panel.log_x);
    const detail::Axis ay = detail::make_axis(ylo, yhi, panel.log_y);

    const double ox = kW * static_cast<double>(p) + kLeft;
    const double pw = kW - kLeft - kRight;
    const double ph = kH - kTop - kBottom;
    auto px = [&](double x) { return ox + ax.map(x) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - ay.map(y)) * ph; };

    svg += "<g>\n";
    svg += "<text x=\"" + detail::num(ox + pw / 2) + "\" y=\"18\" text-anchor=\"middle\" "
           "font-size=\"13\">" + detail::escape_xml(panel.title) + "</text>\n";
    svg += "<rect x=\"" + detail::num(ox) + "\" y=\"" + detail::num(kTop) + "\" width=\"" +
           detail::num(pw) + "\" height=\"" + detail::num(ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : detail::ticks(ay)) {
      const double y = py(t);
      svg += "<line x1=\"" + detail::num(ox) + "\" x2=\"" + detail::num(ox + pw) + "\" y1=\"" +
             detail::num(y) + "\" y2=\"" + detail::num(y) + "\" stroke=\"#ddd\"/>\n";
      svg += "<text x=\"" + detail::num(ox - 4) + "\" y=\"" + detail::num(y + 4) +
             "\" text-anchor=\"end\">" + detail::tick_label(t) + "</text>\n";
    }
    for (double t : detail::ticks(ax)) {
      const double x = px(t);
      svg += "<text x=\"" + detail::num(x) + "\" y=\"" + detail::num(kTop + ph + 15) +
             "\" text-anchor=\"middle\">" + detail::tick_label(t) + "</text>\n";
    }
    svg += "<text x=\"" + detail::num(ox + pw / 2) + "\" y=\"" + detail::num(kH - 12) +
           "\" text-anchor=\"middle\">" + detail::escape_xml(panel.x_label) + "</text>\n";
    svg += "<text transform=\"translate(" + detail::num(ox - 52) + "," +
           detail::num(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           detail::escape_xml(panel.y_label) + "</text>\n";

    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const Series& series = panel.series[s];
      std::string pts;
      const std::size_t n = std::min(series.x.size(), series.y.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (!usable(series.x[i], series.y[i])) continue;
        pts += detail::num(px(series.x[i])) + "," + detail::num(py(series.y[i])) + " ";
      }
      if (pts.empty()) continue;
      pts.pop_back();
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(detail::palette(s)) +
             "\" stroke-width=\"1.4\" points=\"" + pts + "\"/>\n";
      const double ly = kTop + 14.0 + 14.0 * static_cast<double>(s);
      svg += "<line x1=\"" + detail::num(ox + pw - 110) + "\" x2=\"" + detail::num(ox + pw - 92) +
             "\" y1=\"" + detail::num(ly - 4) + "\" y2=\"" + detail::num(ly - 4) +
             "\" stroke=\"" + detail::palette(s) + "\" stroke-width=\"2\"/>\n";
      svg += "<text x=\"" + detail::num(ox + pw - 88) + "\" y=\"" + detail::num(ly) + "\">" +
             detail::escape_xml(series.label) + "</text>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

/// Builds a figure from CSV files, one series per input, one panel per spec.
inline std::vector<Panel> panels_from_csv(const std::vector<PlotInput>& inputs,
                                          const std::vector<PanelSpec>& specs) {
  std::vector<CsvTable> tables;
  tables.reserve(inputs.size());
  for (const auto& in : inputs) tables.push_back(read_csv(in.csv));
  std::vector<Panel> panels;
  for (const auto& spec : specs) {
    Panel panel;
    panel.title = spec.title;
    panel.x_label = spec.x_column;
    panel.y_label = spec.absolute ? "|" + spec.y_column + "|" : spec.y_column;
    panel.log_x = spec.log_x;
    panel.log_y = spec.log_y;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      Series s;
      s.label = inputs[i].label;
      s.x = tables[i].numeric_column(spec.x_column);
      s.y = tables[i].numeric_column(spec.y_column);
      if (spec.absolute)
        for (double& v : s.y) v = std::abs(v);
      panel.series.push_back(std::move(s));
    }
    panels.push_back(std::move(panel));
  }
  return panels;
}

inline void emit_plot(const std::filesystem::path& svg_path, const std::vector<PlotInput>& inputs,
                      const std::vector<PanelSpec>& specs) {
  if (inputs.empty()) throw Error(ErrorCode::EmptySeries, "no series to plot");
  write_file_atomic(svg_path, render_svg(panels_from_csv(inputs, specs)));
}

}  // namespace cgm::harness
