#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbfgnn/config.hpp"
#include "pbfgnn/gnn.hpp"
#include "pbfgnn/gpbo.hpp"
#include "pbfgnn/scanpath.hpp"
#include "pbfgnn/training.hpp"

namespace pbfgnn {

GridSpec domain_grid(const DomainSpec& domain);

/// Island order drawn in the reference figures: A [1,2,3,4],
/// B [7,4,1,8,5,2,9,6,3], C [13,9,5,1,14,10,6,2,15,11,7,3,16,12,8,4].
std::vector<int> reference_sequence(const std::string& label);

/// Every island order of a domain (all of them when n! <= limit).
std::vector<ScanPlan> island_plans(const DomainSpec& domain, std::size_t limit, std::uint64_t seed);

/// `count` distinct plans drawn without replacement from the multi-laser
/// full-factorial design on `grid`.
std::vector<ScanPlan> sample_doe_plans(const GridSpec& grid, int lasers, std::size_t count, std::uint64_t seed);

ThermalHistory simulate_plan(const ScanPlan& plan, const RunConfig& config);

/// Simulates every plan, `workers` plans at a time (0 = hardware threads).
/// Results keep the input order.
std::vector<ThermalHistory> simulate_plans(const std::vector<ScanPlan>& plans, const RunConfig& config,
                                           unsigned workers = 0);

/// Wraps histories as cases sharing one graph per grid.
std::vector<CasePtr> make_cases(std::vector<ThermalHistory> histories, const std::vector<std::string>& labels,
                                Aggregation aggregation);

/// Fresh model with the config's aggregation and temperature scaling.
ModelParams initial_model(Architecture architecture, const FeatureVariant& variant, const RunConfig& config,
                          std::uint64_t seed);

std::vector<std::vector<SampleRef>> sample_lists(const std::vector<CasePtr>& cases);

/// Samples with timestep ≡ offset (mod stride), across all cases.
std::vector<SampleRef> strided_samples(const std::vector<CasePtr>& cases, int stride, int offset = 0);

/// `pool` minus any sample that appears in `used`.
std::vector<SampleRef> exclude_samples(const std::vector<SampleRef>& pool, const std::vector<SampleRef>& used);

struct MultiLaserData {
  std::vector<CasePtr> train;
  std::vector<CasePtr> validation;
};

/// Simulated multi-laser training and validation plans for tuning.
MultiLaserData multi_laser_data(const RunConfig& config, unsigned workers = 0);

/// Trains an ML-GNN for one hyperparameter point under the tuning budget and
/// returns its validation RMSE (°C). `model_out` receives the trained model.
double multi_laser_objective(const HyperPoint& point, const MultiLaserData& data, const RunConfig& config,
                             std::uint64_t seed, ModelParams* model_out = nullptr);

}  // namespace pbfgnn
