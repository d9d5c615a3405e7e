#pragma once

#include <string>
#include <vector>

namespace probelens::cli {

struct Series {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
  bool markers_only = false;  // scatter instead of a polyline
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  // Fixed y range when both are set (e.g. accuracy plots use [0, 1]).
  bool fixed_y = false;
  double y_min = 0.0;
  double y_max = 1.0;
};

/// Self-contained SVG with axes, ticks, a legend and one path per series.
/// Deterministic: no timestamps or random ids. Non-finite points are skipped.
std::string render_svg(const LinePlot& plot);

}  // namespace probelens::cli
