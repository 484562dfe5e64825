#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pbfgnn/gpbo.hpp"
#include "pbfgnn/material.hpp"
#include "pbfgnn/meshgraph.hpp"
#include "pbfgnn/thermal_sim.hpp"
#include "pbfgnn/training.hpp"

namespace pbfgnn {

struct DomainSpec {
  std::string label;
  double side_length = 2.0;  // mm
  double node_spacing = 0.05;
  double island_size = 1.0;
};

struct TransferSpec {
  int freeze_last = 2;
  std::size_t n_train = 14;
  std::size_t n_val = 2;
};

struct TuneSpec {
  TuneConfig search;
  int lasers = 3;
  int training_plans = 20;
  int validation_plans = 4;
  double side_length = 2.0;
  int steps_per_candidate = 2000;
  int validation_stride = 10;  // score every n-th validation timestep
};

struct RunConfig {
  MaterialTable material = MaterialTable::in625();
  ProcessParams process;
  SimOptions simulation;
  std::vector<DomainSpec> domains;  // A, B, C by default
  TrainConfig training;
  Aggregation aggregation = Aggregation::Mean;
  TemperatureScaling scaling = TemperatureScaling::standard();
  int train_cases = 20;             // leading cases trained on; the rest are held out
  TransferSpec tl3{2, 14, 2};
  TransferSpec tl4{2, 4, 1};
  TuneSpec tune;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::string model;                // optional input checkpoint; must exist when set

  const DomainSpec& domain(const std::string& label) const;
};

RunConfig default_run_config();

/// Parses a JSON config layered over the defaults. Unknown keys, wrong types
/// and values failing validation raise InvalidArgument. Relative paths are
/// resolved against `base_dir`.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Every seed in the config derives from `seed`.
void override_seed(RunConfig& config, std::uint64_t seed);

std::vector<std::string> validate_run_config(const RunConfig& config);

/// Canonical JSON (sorted keys, shortest round-trip numbers).
std::string run_config_json(const RunConfig& config);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace pbfgnn
