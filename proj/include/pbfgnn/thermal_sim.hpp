#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "pbfgnn/material.hpp"
#include "pbfgnn/scanpath.hpp"

namespace pbfgnn {

/// Ellipsoidal Gaussian volumetric source. a: transverse half-width, b: depth,
/// c: length along travel, all mm.
struct GoldakParams {
  double a_width = 0.05;
  double b_depth = 0.02;
  double c_length = 0.05;
  double power = 195.0;
  double efficiency = 0.4;
};

/// a = c = laser radius, b = plate thickness.
GoldakParams goldak_from_process(const ProcessParams& params);

/// Volumetric power density (W/mm³) at offset (dx transverse, dy depth, dz along travel).
template <typename Scalar>
Scalar goldak_power(const GoldakParams& g, Scalar dx, Scalar dy, Scalar dz) {
  using std::exp;
  using std::sqrt;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar peak = Scalar(6) * sqrt(Scalar(3)) * Scalar(g.power) * Scalar(g.efficiency) /
                      (Scalar(g.a_width) * Scalar(g.b_depth) * Scalar(g.c_length) * pi * sqrt(pi));
  return peak * exp(-Scalar(3) * dx * dx / Scalar(g.a_width * g.a_width) -
                    Scalar(3) * dy * dy / Scalar(g.b_depth * g.b_depth) -
                    Scalar(3) * dz * dz / Scalar(g.c_length * g.c_length));
}

/// Source averaged through a plate of the given thickness: (1/δ)∫₀^δ Q dy.
double goldak_depth_averaged(const GoldakParams& g, double dx, double dz, double thickness);

/// Largest stable forward-Euler step at temperature t_ref (no safety factor).
/// Returns std::numeric_limits<double>::max() when nothing transports heat.
double stability_limit(const GridSpec& grid, const MaterialTable& material,
                       const ProcessParams& params, double t_ref);
/// Minimum of stability_limit over the table's temperature range.
double conservative_stability_limit(const GridSpec& grid, const MaterialTable& material,
                                    const ProcessParams& params);

struct ThermalState {
  GridSpec grid;
  Eigen::VectorXd temperature;  // °C, one per node
  double time = 0.0;            // s
};

ThermalState uniform_state(const GridSpec& grid, double temperature);

/// A source located at `focal_node` shifted by (offset_i, offset_j) node
/// spacings. `along_j` selects which grid axis is the travel direction.
struct ActiveSource {
  GoldakParams goldak;
  int focal_node = 0;
  double offset_i = 0.0;
  double offset_j = 0.0;
  bool along_j = false;
};

struct StepEnergy {
  double deposited = 0.0;  // J added by sources
  double lost = 0.0;       // J removed through all boundary faces
};

/// One forward-Euler step of the depth-lumped plate:
/// ρC_p dT/dt = ∇·(k∇T) + Q̄ − (h/δ)(T−T∞) − (h_sub/δ)(T−T_sub), with lateral
/// perimeter faces losing h·(T−T∞) through their exposed area.
/// Throws NumericBlowup if a temperature becomes non-finite.
ThermalState step(const ThermalState& state, const std::vector<ActiveSource>& sources, double dt,
                  const MaterialTable& material, const ProcessParams& params,
                  StepEnergy* energy = nullptr);

/// Σ ρ C_p(T) T · cell volume, J.
double stored_energy(const ThermalState& state, const MaterialTable& material,
                     const ProcessParams& params);

struct ThermalFrame {
  std::uint32_t timestep = 0;
  std::vector<std::uint32_t> focal_nodes;
  std::vector<float> temperature;

  bool operator==(const ThermalFrame&) const = default;
};

struct ThermalHistory {
  GridSpec grid;
  std::vector<ThermalFrame> frames;
  double dwell = 0.0;

  std::size_t frame_count() const { return frames.size(); }
  Eigen::VectorXd temperatures(std::size_t frame) const;
  bool operator==(const ThermalHistory&) const = default;
};

struct SimOptions {
  double initial_temperature = 80.0;
  double safety = 0.5;          // fraction of the stability limit actually used
  // Extra refinement on top of the stability-limited step; at 1 the
  // first-order time error is several percent near the source.
  int substep_multiplier = 8;
  // Source ellipsoid in mm. Zero a or c means "laser radius"; zero b means
  // "plate thickness". The default depth is a melt-pool scale, so most of
  // the absorbed power passes below the simulated layer.
  double goldak_a = 0.0;
  double goldak_b = 0.1;
  double goldak_c = 0.0;
};

GoldakParams goldak_for(const ProcessParams& params, const SimOptions& options);

/// Runs the plan's schedule; frame 0 is the uniform initial field, then one
/// frame per schedule step. During step t a laser's source slides from its
/// previous node to its current node when the two are grid neighbours.
ThermalHistory simulate(const ScanPlan& plan, const MaterialTable& material,
                        const ProcessParams& params, const SimOptions& options = {});

}  // namespace pbfgnn
