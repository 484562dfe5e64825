#pragma once

#include <vector>

#include "pbfgnn/gnn.hpp"
#include "pbfgnn/meshgraph.hpp"
#include "pbfgnn/scanpath.hpp"
#include "pbfgnn/thermal_sim.hpp"

namespace pbfgnn {

struct RolloutResult {
  ThermalHistory predicted;
  std::vector<double> error;  // per-frame RMSE against truth, empty without truth
};

/// Autoregressive prediction: frame 0 is uniform at initial_temperature and
/// every later frame is the model's inference-mode output on the previous
/// predicted frame. Throws RolloutDivergence on a non-finite prediction.
ThermalHistory rollout(const ModelParams& model, const MeshGraph& graph, const PropagationMatrix& propagation,
                       const LaserSchedule& schedule, double initial_temperature, const FeatureVariant& variant);

/// RMSE over all nodes for each frame. Frames are matched by index; the
/// histories must agree in frame count, node count and timestep indices.
std::vector<double> error_curve(const ThermalHistory& predicted, const ThermalHistory& truth);

/// Rollout plus its error curve against a solver history of the same plan.
RolloutResult rollout_against(const ModelParams& model, const MeshGraph& graph,
                              const PropagationMatrix& propagation, const LaserSchedule& schedule,
                              const ThermalHistory& truth, const FeatureVariant& variant);

/// Least-squares slope of values[first..last] against their indices.
double regression_slope(const std::vector<double>& values, std::size_t first, std::size_t last);

}  // namespace pbfgnn
