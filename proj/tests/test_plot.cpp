#include <doctest.h>

#include <regex>

#include "pbfgnn/plot.hpp"

using namespace pbfgnn;

namespace {

int count(const std::string& s, const std::string& needle) {
  int n = 0;
  for (std::size_t at = s.find(needle); at != std::string::npos; at = s.find(needle, at + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("colormap endpoints and clamping") {
  CHECK(temperature_color(kColormapMin) == temperature_color(-100.0));
  CHECK(temperature_color(kColormapMax) == temperature_color(5000.0));
  CHECK_FALSE(temperature_color(kColormapMin) == temperature_color(kColormapMax));
  // Brightness grows with temperature across the range.
  double last = -1.0;
  for (double t = kColormapMin; t <= kColormapMax; t += 25.0) {
    const auto c = temperature_color(t);
    const double luminance = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
    CHECK(luminance >= last - 1.0);
    last = luminance;
  }
}

TEST_CASE("field_svg draws one square per node") {
  const GridSpec g = make_grid(0.2, 0.05);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(g.node_count(), 25.0, 2000.0);
  const std::string svg = field_svg(g, t, "frame <3> & more");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("frame &lt;3&gt; &amp; more") != std::string::npos);
  CHECK(count(svg, "<rect") >= g.node_count());
  CHECK_THROWS(field_svg(g, Eigen::VectorXd::Zero(3), "bad"));
}

TEST_CASE("curve_svg draws every series") {
  const std::string svg =
      curve_svg({{"spiral", {1.0, 2.0, 4.0, 3.0}}, {"hilbert", {0.5, 1.5, 2.5, 5.0}}}, "rmse", "timestep", "°C");
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.find("spiral") != std::string::npos);
  CHECK(svg.find("hilbert") != std::string::npos);
  const std::string empty = curve_svg({}, "none", "x", "y");
  CHECK(empty.find("</svg>") != std::string::npos);
}
