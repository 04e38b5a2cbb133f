#pragma once

#include <string>
#include <vector>

namespace aimlake {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logy = false;
};

/// Static SVG line chart; non-positive values are dropped on a log axis.
void write_svg_plot(const std::string& path, const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace aimlake
