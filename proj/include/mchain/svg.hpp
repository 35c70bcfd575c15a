#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mchain {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 720;
  int height = 440;
};

/// Standalone SVG line chart (axes, min/max tick labels, legend). Output is a
/// pure function of the inputs.
std::string line_chart_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

}  // namespace mchain
