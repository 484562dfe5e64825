#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pbfgnn {

struct PropertyPoint {
  double temperature;  // °C
  double value;
};

enum class Property { Conductivity, Expansion, SpecificHeat };

// Throws InvalidArgument for anything other than
// "conductivity", "expansion" or "specific_heat".
Property parse_property(std::string_view name);
std::string_view property_name(Property p);

/// Temperature-dependent thermophysical properties of the build alloy.
/// Units: k in W/mm/°C, α in mm/mm/°C, C_p in J/g/°C, density in g/mm³.
struct MaterialTable {
  std::vector<PropertyPoint> conductivity;
  std::vector<PropertyPoint> expansion;
  std::vector<PropertyPoint> specific_heat;
  double density = 8.44e-3;

  const std::vector<PropertyPoint>& points(Property p) const;

  /// IN625 reference data.
  static MaterialTable in625();
};

/// Piecewise-linear interpolation, clamped to the end values outside the table.
double interpolate_property(const MaterialTable& table, Property which, double temperature);
double interpolate(const std::vector<PropertyPoint>& points, double temperature);

/// Empty when the table is valid; one line per violated invariant otherwise.
std::vector<std::string> validate_table(const MaterialTable& table);

/// Laser and boundary-condition parameters. Internal units: mm, s, g, W, °C.
struct ProcessParams {
  double scan_speed = 1200.0;           // mm/s
  double laser_radius = 0.05;           // mm
  double power = 195.0;                 // W
  double absorptivity = 0.4;            // (0, 1]
  double substrate_temperature = 80.0;  // °C
  double ambient_temperature = 25.0;    // °C
  double effective_htc = 2.5e-5;        // W/(mm²·°C)  (25 W/(m²·°C))
  double plate_thickness = 0.02;        // mm
  // Bottom-face coupling to the substrate, W/(mm²·°C).
  double substrate_htc = 0.05;

  static ProcessParams defaults() { return {}; }
};

std::vector<std::string> validate_process(const ProcessParams& params);

// 1 W/(m²·°C) = 1e-6 W/(mm²·°C)
constexpr double htc_si_to_mm(double w_per_m2) { return w_per_m2 * 1e-6; }

}  // namespace pbfgnn
