#pragma once

#include <string>
#include <vector>

namespace rmtfid {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained 800x500 SVG line chart, one polyline per series.
std::string render_line_chart(const std::vector<PlotSeries>& series, const std::string& x_label,
                              const std::string& y_label, const std::string& title);

}  // namespace rmtfid
