#pragma once

#include <string>
#include <utility>
#include <vector>

namespace refscore::app {

struct Bar {
  std::string label;
  double value = 0.0;
  double low = 0.0;   // whisker range; equal to value for none
  double high = 0.0;
};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Fixed-size SVG documents. Coordinates are printed with two decimals so
// output is stable byte for byte.
std::string bar_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars);
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

}  // namespace refscore::app
