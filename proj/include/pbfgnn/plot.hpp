#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pbfgnn/scanpath.hpp"

namespace pbfgnn {

inline constexpr double kColormapMin = 25.0;
inline constexpr double kColormapMax = 2000.0;

/// Fixed temperature colormap (black, purple, red, orange, pale yellow),
/// clamped to [25, 2000] °C.
std::array<unsigned char, 3> temperature_color(double celsius);

/// One square per node, row 0 at the bottom, with a colour bar.
std::string field_svg(const GridSpec& grid, const Eigen::VectorXd& temperature, const std::string& title);

struct CurveSeries {
  std::string name;
  std::vector<double> values;  // y at x = 0, 1, 2, ...
};

/// Line chart of one or more series sharing the x axis.
std::string curve_svg(const std::vector<CurveSeries>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label);

}  // namespace pbfgnn
