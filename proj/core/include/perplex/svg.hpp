#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace perplex {

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
};

// Standalone SVG document with the charts stacked vertically. Output depends
// only on the input, so identical reports render identical bytes.
std::string render_svg(std::span<const LineChart> charts);

}  // namespace perplex
