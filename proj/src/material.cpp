#include "pbfgnn/material.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pbfgnn/error.hpp"

namespace pbfgnn {

Property parse_property(std::string_view name) {
  if (name == "conductivity") return Property::Conductivity;
  if (name == "expansion") return Property::Expansion;
  if (name == "specific_heat") return Property::SpecificHeat;
  throw InvalidArgument("unknown property kind '" + std::string(name) + "'");
}

std::string_view property_name(Property p) {
  switch (p) {
    case Property::Conductivity: return "conductivity";
    case Property::Expansion: return "expansion";
    case Property::SpecificHeat: return "specific_heat";
  }
  throw InvalidArgument("unknown property kind");
}

const std::vector<PropertyPoint>& MaterialTable::points(Property p) const {
  switch (p) {
    case Property::Conductivity: return conductivity;
    case Property::Expansion: return expansion;
    case Property::SpecificHeat: return specific_heat;
  }
  throw InvalidArgument("unknown property kind");
}

MaterialTable MaterialTable::in625() {
  MaterialTable t;
  t.conductivity = {{25, 0.01},    {200, 0.0125}, {300, 0.014}, {400, 0.015},
                    {500, 0.016},  {600, 0.018},  {800, 0.022}, {900, 0.024},
                    {1000, 0.025}, {1200, 0.0255}};
  t.expansion = {{20, 1.28e-05},  {93, 1.28e-05},  {204, 1.31e-05}, {316, 1.33e-05},
                 {427, 1.37e-05}, {538, 1.40e-05}, {649, 1.48e-05}, {760, 1.53e-05},
                 {871, 1.58e-05}, {927, 1.62e-05}};
  t.specific_heat = {{25, 0.405},  {200, 0.46},  {300, 0.48}, {400, 0.5},
                     {500, 0.525}, {600, 0.55},  {800, 0.6},  {900, 0.63},
                     {1000, 0.65}, {1200, 0.68}};
  t.density = 8.44e-3;
  return t;
}

double interpolate(const std::vector<PropertyPoint>& pts, double temperature) {
  if (pts.empty()) throw InvalidArgument("empty property table");
  if (temperature <= pts.front().temperature) return pts.front().value;
  if (temperature >= pts.back().temperature) return pts.back().value;
  auto hi = std::upper_bound(pts.begin(), pts.end(), temperature,
                             [](double t, const PropertyPoint& p) { return t < p.temperature; });
  auto lo = hi - 1;
  if (temperature == lo->temperature) return lo->value;
  double w = (temperature - lo->temperature) / (hi->temperature - lo->temperature);
  return lo->value + w * (hi->value - lo->value);
}

double interpolate_property(const MaterialTable& table, Property which, double temperature) {
  return interpolate(table.points(which), temperature);
}

std::vector<std::string> validate_table(const MaterialTable& table) {
  std::vector<std::string> report;
  for (Property p : {Property::Conductivity, Property::Expansion, Property::SpecificHeat}) {
    const auto& pts = table.points(p);
    const std::string name(property_name(p));
    if (pts.size() < 2) report.push_back(name + ": fewer than 2 points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!(pts[i].value > 0.0) || !std::isfinite(pts[i].value))
        report.push_back(name + ": non-positive value at index " + std::to_string(i));
      if (i > 0 && !(pts[i].temperature > pts[i - 1].temperature))
        report.push_back(name + ": non-increasing temperature at index " + std::to_string(i));
    }
  }
  if (!(table.density > 0.0)) report.push_back("density: non-positive value");
  return report;
}

std::vector<std::string> validate_process(const ProcessParams& p) {
  std::vector<std::string> report;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) report.push_back(std::string(name) + ": must be > 0");
  };
  positive(p.scan_speed, "scan_speed");
  positive(p.laser_radius, "laser_radius");
  positive(p.power, "power");
  positive(p.plate_thickness, "plate_thickness");
  if (!(p.absorptivity > 0.0 && p.absorptivity <= 1.0))
    report.push_back("absorptivity: must lie in (0, 1]");
  if (!(p.substrate_temperature >= 0.0)) report.push_back("substrate_temperature: must be >= 0");
  if (!(p.ambient_temperature >= 0.0)) report.push_back("ambient_temperature: must be >= 0");
  if (!(p.effective_htc >= 0.0)) report.push_back("effective_htc: must be >= 0");
  if (!(p.substrate_htc >= 0.0)) report.push_back("substrate_htc: must be >= 0");
  return report;
}

}  // namespace pbfgnn
