#include "pbfgnn/rollout.hpp"

#include <cmath>

#include "pbfgnn/error.hpp"

namespace pbfgnn {

ThermalHistory rollout(const ModelParams& model, const MeshGraph& graph, const PropagationMatrix& propagation,
                       const LaserSchedule& schedule, double initial_temperature, const FeatureVariant& variant) {
  if (model.input_width() != variant.width())
    throw InvalidArgument("model input width does not match the feature variant");
  if (schedule.grid.node_count() != graph.node_count)
    throw InvalidArgument("schedule grid does not match the graph");

  ThermalHistory out;
  out.grid = schedule.grid;
  out.dwell = schedule.dwell;
  Eigen::VectorXd current = Eigen::VectorXd::Constant(graph.node_count, initial_temperature);

  auto push = [&](std::uint32_t t, const Eigen::VectorXd& field, const std::vector<int>& focal) {
    ThermalFrame f;
    f.timestep = t;
    f.focal_nodes.assign(focal.begin(), focal.end());
    f.temperature.resize(static_cast<std::size_t>(field.size()));
    for (Eigen::Index v = 0; v < field.size(); ++v) f.temperature[static_cast<std::size_t>(v)] = static_cast<float>(field[v]);
    out.frames.push_back(std::move(f));
  };
  push(0, current, {});

  for (std::size_t t = 0; t < schedule.timestep_count(); ++t) {
    const std::vector<int> focal = schedule.focal_nodes(t);
    Eigen::VectorXd next = predict(model, assemble_features(current, graph, focal, variant), propagation);
    if (!next.allFinite()) throw RolloutDivergence(t + 1);
    push(static_cast<std::uint32_t>(t + 1), next, focal);
    current = std::move(next);
  }
  return out;
}

std::vector<double> error_curve(const ThermalHistory& predicted, const ThermalHistory& truth) {
  if (predicted.frame_count() != truth.frame_count())
    throw InvalidArgument("frame counts differ: " + std::to_string(predicted.frame_count()) + " vs " +
                          std::to_string(truth.frame_count()));
  std::vector<double> out;
  out.reserve(predicted.frame_count());
  for (std::size_t f = 0; f < predicted.frame_count(); ++f) {
    const auto& a = predicted.frames[f];
    const auto& b = truth.frames[f];
    if (a.temperature.size() != b.temperature.size()) throw InvalidArgument("node counts differ");
    if (a.timestep != b.timestep) throw InvalidArgument("timestep indices differ at frame " + std::to_string(f));
    double sq = 0.0;
    for (std::size_t v = 0; v < a.temperature.size(); ++v) {
      const double e = static_cast<double>(a.temperature[v]) - static_cast<double>(b.temperature[v]);
      sq += e * e;
    }
    out.push_back(a.temperature.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(a.temperature.size())));
  }
  return out;
}

RolloutResult rollout_against(const ModelParams& model, const MeshGraph& graph,
                              const PropagationMatrix& propagation, const LaserSchedule& schedule,
                              const ThermalHistory& truth, const FeatureVariant& variant) {
  if (truth.frames.empty()) throw InvalidArgument("truth history has no frames");
  const double initial = truth.frames.front().temperature.empty() ? 0.0 : truth.frames.front().temperature.front();
  RolloutResult r;
  r.predicted = rollout(model, graph, propagation, schedule, initial, variant);
  r.error = error_curve(r.predicted, truth);
  return r;
}

double regression_slope(const std::vector<double>& values, std::size_t first, std::size_t last) {
  if (last >= values.size() || last <= first) throw InvalidArgument("slope window out of range");
  const double n = static_cast<double>(last - first + 1);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = first; i <= last; ++i) {
    const double x = static_cast<double>(i), y = values[i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace pbfgnn
