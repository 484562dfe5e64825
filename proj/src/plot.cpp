#include "pbfgnn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pbfgnn/error.hpp"

namespace pbfgnn {

namespace {

struct Stop {
  double t;
  double r, g, b;
};

constexpr Stop kStops[] = {
    {0.00, 0, 0, 4},       {0.25, 87, 16, 110},  {0.50, 188, 55, 84},
    {0.75, 249, 142, 9},   {1.00, 252, 255, 164},
};

std::string escape(const std::string& s) {
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

std::string hex(const std::array<unsigned char, 3>& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::array<unsigned char, 3> temperature_color(double celsius) {
  double u = std::isnan(celsius) ? 0.0 : (celsius - kColormapMin) / (kColormapMax - kColormapMin);
  u = std::clamp(u, 0.0, 1.0);
  std::size_t k = 0;
  while (k + 2 < std::size(kStops) && u > kStops[k + 1].t) ++k;
  const Stop& a = kStops[k];
  const Stop& b = kStops[k + 1];
  const double f = (u - a.t) / (b.t - a.t);
  auto mix = [f](double x, double y) { return static_cast<unsigned char>(std::lround(x + f * (y - x))); };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

std::string field_svg(const GridSpec& grid, const Eigen::VectorXd& temperature, const std::string& title) {
  if (temperature.size() != grid.node_count()) throw InvalidArgument("field length does not match the grid");
  const double cell = std::max(2.0, 480.0 / std::max(grid.nx, grid.ny));
  const double w = cell * grid.nx, h = cell * grid.ny;
  const double margin = 40.0, bar = 20.0;
  const double width = w + 2 * margin + bar + 60.0, height = h + 2 * margin;

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
                  "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(margin) + "\" y=\"" + num(margin * 0.6) + "\" font-family=\"sans-serif\" font-size=\"14\">" +
       escape(title) + "</text>\n";
  s += "<g shape-rendering=\"crispEdges\">\n";
  for (int v = 0; v < grid.node_count(); ++v) {
    const double x = margin + grid.column(v) * cell;
    const double y = margin + (grid.ny - 1 - grid.row(v)) * cell;
    s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
         "\" fill=\"" + hex(temperature_color(temperature[v])) + "\"/>\n";
  }
  s += "</g>\n";

  const double bx = margin + w + 20.0;
  constexpr int kBands = 64;
  for (int k = 0; k < kBands; ++k) {
    const double t = kColormapMin + (kColormapMax - kColormapMin) * (k + 0.5) / kBands;
    const double y = margin + h - (k + 1) * h / kBands;
    s += "<rect x=\"" + num(bx) + "\" y=\"" + num(y) + "\" width=\"" + num(bar) + "\" height=\"" +
         num(h / kBands + 0.5) + "\" fill=\"" + hex(temperature_color(t)) + "\"/>\n";
  }
  for (double t : {kColormapMin, 500.0, 1000.0, 1500.0, kColormapMax}) {
    const double y = margin + h - (t - kColormapMin) / (kColormapMax - kColormapMin) * h;
    s += "<text x=\"" + num(bx + bar + 4) + "\" y=\"" + num(y + 4) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + label(t) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string curve_svg(const std::vector<CurveSeries>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  const double width = 640, height = 400, left = 70, right = 150, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  std::size_t n = 0;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& c : series) {
    n = std::max(n, c.values.size());
    for (double v : c.values) {
      if (!std::isfinite(v)) continue;
      lo = any ? std::min(lo, v) : v;
      hi = any ? std::max(hi, v) : v;
      any = true;
    }
  }
  lo = std::min(lo, 0.0);
  if (hi <= lo) hi = lo + 1.0;
  const double xmax = n > 1 ? static_cast<double>(n - 1) : 1.0;
  auto px = [&](double x) { return left + x / xmax * pw; };
  auto py = [&](double y) { return top + ph - (y - lo) / (hi - lo) * ph; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
                  "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(left) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + escape(title) +
       "</text>\n";
  s += "<g stroke=\"black\" stroke-width=\"1\"><line x1=\"" + num(left) + "\" y1=\"" + num(top + ph) + "\" x2=\"" +
       num(left + pw) + "\" y2=\"" + num(top + ph) + "\"/><line x1=\"" + num(left) + "\" y1=\"" + num(top) +
       "\" x2=\"" + num(left) + "\" y2=\"" + num(top + ph) + "\"/></g>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = lo + (hi - lo) * k / 4.0, xv = xmax * k / 4.0;
    s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(yv) + 4) +
         "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + label(yv) + "</text>\n";
    s += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(top + ph + 16) +
         "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" + label(xv) + "</text>\n";
  }
  s += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 10) +
       "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num(top + ph / 2) + "\" font-family=\"sans-serif\" font-size=\"12\" " +
       "text-anchor=\"middle\" transform=\"rotate(-90 16 " + num(top + ph / 2) + ")\">" + escape(y_label) +
       "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % std::size(kColors)];
    std::string pts;
    for (std::size_t i = 0; i < series[k].values.size(); ++i) {
      const double v = series[k].values[i];
      if (!std::isfinite(v)) continue;
      pts += num(px(static_cast<double>(i))) + "," + num(py(v)) + " ";
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
         "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(k) + 6;
    s += "<line x1=\"" + num(left + pw + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(left + pw + 32) + "\" y2=\"" +
         num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(left + pw + 36) + "\" y=\"" + num(ly + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(series[k].name) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace pbfgnn
