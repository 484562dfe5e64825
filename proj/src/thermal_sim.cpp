#include "pbfgnn/thermal_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pbfgnn/error.hpp"

namespace pbfgnn {

GoldakParams goldak_from_process(const ProcessParams& p) {
  return {p.laser_radius, p.plate_thickness, p.laser_radius, p.power, p.absorptivity};
}

GoldakParams goldak_for(const ProcessParams& params, const SimOptions& o) {
  GoldakParams g = goldak_from_process(params);
  if (o.goldak_a > 0.0) g.a_width = o.goldak_a;
  if (o.goldak_b > 0.0) g.b_depth = o.goldak_b;
  if (o.goldak_c > 0.0) g.c_length = o.goldak_c;
  return g;
}

double goldak_depth_averaged(const GoldakParams& g, double dx, double dz, double thickness) {
  // ∫₀^δ exp(−3y²/b²) dy = b·√π/(2√3)·erf(√3·δ/b)
  const double sqrt3 = std::sqrt(3.0);
  const double depth_integral =
      g.b_depth * std::sqrt(std::numbers::pi) / (2.0 * sqrt3) * std::erf(sqrt3 * thickness / g.b_depth);
  return goldak_power(g, dx, 0.0, dz) * depth_integral / thickness;
}

double stability_limit(const GridSpec& grid, const MaterialTable& material,
                       const ProcessParams& params, double t_ref) {
  const double s = grid.node_spacing;
  const double k = interpolate_property(material, Property::Conductivity, t_ref);
  const double cp = interpolate_property(material, Property::SpecificHeat, t_ref);
  const double denom =
      4.0 * k / (s * s) + (params.effective_htc + params.substrate_htc) / params.plate_thickness;
  if (!(denom > 0.0)) return std::numeric_limits<double>::max();
  return material.density * cp / denom;
}

double conservative_stability_limit(const GridSpec& grid, const MaterialTable& material,
                                    const ProcessParams& params) {
  // ρC_p / (a·k + b) is monotone on every linear segment, so the minimum sits on a breakpoint.
  double best = std::numeric_limits<double>::max();
  for (const auto* pts : {&material.conductivity, &material.specific_heat})
    for (const auto& p : *pts)
      best = std::min(best, stability_limit(grid, material, params, p.temperature));
  return best;
}

ThermalState uniform_state(const GridSpec& grid, double temperature) {
  return {grid, Eigen::VectorXd::Constant(grid.node_count(), temperature), 0.0};
}

double stored_energy(const ThermalState& state, const MaterialTable& material,
                     const ProcessParams& params) {
  const double vol = state.grid.node_spacing * state.grid.node_spacing * params.plate_thickness;
  double e = 0.0;
  for (Eigen::Index n = 0; n < state.temperature.size(); ++n) {
    double t = state.temperature[n];
    e += material.density * interpolate_property(material, Property::SpecificHeat, t) * t * vol;
  }
  return e;
}

namespace {

// Depth-averaged source density added to every node within the Gaussian's support.
void deposit(const GridSpec& grid, const ActiveSource& src, double thickness, Eigen::VectorXd& q) {
  const double s = grid.node_spacing;
  const auto& g = src.goldak;
  const double reach = 3.7 * std::max(g.a_width, g.c_length);  // exp(-3·3.7²) ≈ 1e-18
  const int radius = static_cast<int>(std::ceil(reach / s)) + 1;
  const int fi = grid.column(src.focal_node), fj = grid.row(src.focal_node);
  for (int dj = -radius; dj <= radius; ++dj) {
    const int j = fj + dj;
    if (j < 0 || j >= grid.ny) continue;
    for (int di = -radius; di <= radius; ++di) {
      const int i = fi + di;
      if (i < 0 || i >= grid.nx) continue;
      const double ox = (static_cast<double>(di) - src.offset_i) * s;
      const double oy = (static_cast<double>(dj) - src.offset_j) * s;
      const double along = src.along_j ? oy : ox;
      const double across = src.along_j ? ox : oy;
      q[grid.index(i, j)] += goldak_depth_averaged(g, across, along, thickness);
    }
  }
}

}  // namespace

ThermalState step(const ThermalState& state, const std::vector<ActiveSource>& sources, double dt,
                  const MaterialTable& material, const ProcessParams& params, StepEnergy* energy) {
  const GridSpec& grid = state.grid;
  const int nx = grid.nx, ny = grid.ny;
  const int n = grid.node_count();
  if (state.temperature.size() != n) throw InvalidArgument("state size does not match grid");
  const double s = grid.node_spacing;
  const double delta = params.plate_thickness;
  const double h = params.effective_htc;
  const double h_sub = params.substrate_htc;
  const double t_inf = params.ambient_temperature;
  const double t_sub = params.substrate_temperature;
  const double inv_s2 = 1.0 / (s * s);
  const double vol = s * s * delta;

  const Eigen::VectorXd& T = state.temperature;
  Eigen::VectorXd k(n), cp(n);
  for (int v = 0; v < n; ++v) {
    k[v] = interpolate_property(material, Property::Conductivity, T[v]);
    cp[v] = interpolate_property(material, Property::SpecificHeat, T[v]);
  }
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (const auto& src : sources) {
    if (src.focal_node < 0 || src.focal_node >= n) throw InvalidArgument("focal node out of range");
    deposit(grid, src, delta, q);
  }

  auto face_flux = [&](int a, int b) {
    const double kf = 2.0 * k[a] * k[b] / (k[a] + k[b]);
    return kf * (T[b] - T[a]);
  };

  ThermalState next{grid, Eigen::VectorXd(n), state.time + dt};
  double deposited = 0.0, lost = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v = grid.index(i, j);
      const double west = i > 0 ? face_flux(v, v - 1) : 0.0;
      const double east = i < nx - 1 ? face_flux(v, v + 1) : 0.0;
      const double south = j > 0 ? face_flux(v, v - nx) : 0.0;
      const double north = j < ny - 1 ? face_flux(v, v + nx) : 0.0;
      const double conduction = ((west + east) + (south + north)) * inv_s2;
      const int exposed = (i == 0) + (i == nx - 1) + (j == 0) + (j == ny - 1);
      const double loss = (h / delta) * (T[v] - t_inf) + (h_sub / delta) * (T[v] - t_sub) +
                          exposed * (h / s) * (T[v] - t_inf);
      next.temperature[v] = T[v] + dt * (conduction + q[v] - loss) / (material.density * cp[v]);
      deposited += q[v] * vol * dt;
      lost += loss * vol * dt;
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!std::isfinite(next.temperature[v])) throw NumericBlowup(static_cast<std::size_t>(v), next.time);
  }
  if (energy) *energy = {deposited, lost};
  return next;
}

Eigen::VectorXd ThermalHistory::temperatures(std::size_t frame) const {
  const auto& f = frames.at(frame).temperature;
  Eigen::VectorXd out(static_cast<Eigen::Index>(f.size()));
  for (std::size_t v = 0; v < f.size(); ++v) out[static_cast<Eigen::Index>(v)] = f[v];
  return out;
}

namespace {

ThermalFrame make_frame(std::uint32_t t, const Eigen::VectorXd& temperature,
                        std::vector<std::uint32_t> focal) {
  ThermalFrame f;
  f.timestep = t;
  f.focal_nodes = std::move(focal);
  f.temperature.resize(static_cast<std::size_t>(temperature.size()));
  for (Eigen::Index v = 0; v < temperature.size(); ++v)
    f.temperature[static_cast<std::size_t>(v)] = static_cast<float>(temperature[v]);
  return f;
}

constexpr int kSourceSamples = 16;

}  // namespace

ThermalHistory simulate(const ScanPlan& plan, const MaterialTable& material,
                        const ProcessParams& params, const SimOptions& options) {
  if (auto r = validate_table(material); !r.empty()) throw InvalidArgument("material: " + r.front());
  if (auto r = validate_process(params); !r.empty()) throw InvalidArgument("process: " + r.front());
  const LaserSchedule schedule = compile_schedule(plan, params);
  const GridSpec& grid = plan.grid;
  const GoldakParams goldak = goldak_for(params, options);

  ThermalHistory history;
  history.grid = grid;
  history.dwell = schedule.dwell;

  ThermalState state = uniform_state(grid, options.initial_temperature);
  history.frames.push_back(make_frame(0, state.temperature, {}));
  if (schedule.timestep_count() == 0) return history;

  const double dt_max = conservative_stability_limit(grid, material, params) * options.safety;
  int substeps = static_cast<int>(std::ceil(schedule.dwell / dt_max - 1e-12));
  substeps = std::max(1, substeps) * std::max(1, options.substep_multiplier);
  const double dt = schedule.dwell / substeps;
  const int samples_per_substep = std::max(1, (kSourceSamples + substeps - 1) / substeps);

  std::vector<int> previous(plan.laser_count(), -1);
  for (std::size_t t = 0; t < schedule.timestep_count(); ++t) {
    const auto& entries = schedule.steps[t];
    std::vector<std::uint32_t> focal;
    for (const auto& e : entries) focal.push_back(static_cast<std::uint32_t>(e.node));

    for (int sub = 0; sub < substeps; ++sub) {
      // A sliding source is averaged over fixed sample points along its track so
      // the deposited heat does not depend on how finely the dwell is cut.
      std::vector<ActiveSource> sources;
      for (const auto& e : entries) {
        const int prev = previous[e.laser];
        const int di = prev >= 0 ? grid.column(e.node) - grid.column(prev) : 0;
        const int dj = prev >= 0 ? grid.row(e.node) - grid.row(prev) : 0;
        if (std::abs(di) + std::abs(dj) != 1) {
          sources.push_back({goldak, e.node, 0.0, 0.0, false});
          continue;
        }
        ActiveSource src{goldak, e.node, 0.0, 0.0, dj != 0};
        src.goldak.power /= samples_per_substep;
        for (int q = 0; q < samples_per_substep; ++q) {
          const double lag = 1.0 - (sub + (q + 0.5) / samples_per_substep) / substeps;
          src.offset_i = -lag * di;
          src.offset_j = -lag * dj;
          sources.push_back(src);
        }
      }
      state = step(state, sources, dt, material, params);
    }
    for (const auto& e : entries) previous[e.laser] = e.node;
    history.frames.push_back(make_frame(static_cast<std::uint32_t>(t + 1), state.temperature, focal));
  }
  return history;
}

}  // namespace pbfgnn
