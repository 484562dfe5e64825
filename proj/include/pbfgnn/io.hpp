#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pbfgnn/gnn.hpp"
#include "pbfgnn/gpbo.hpp"
#include "pbfgnn/scanpath.hpp"
#include "pbfgnn/thermal_sim.hpp"
#include "pbfgnn/training.hpp"

namespace pbfgnn {

inline constexpr std::uint32_t kHistoryVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr int kPlanVersion = 1;

/// "MGTH" container, little-endian:
///   magic, u32 version, u32 nx, u32 ny, u32 frame count, f64 dwell, f64 spacing
///   per frame: u32 timestep, u16 focal count, u32 focal indices, f32 × nx·ny
/// The grid side length is not stored; loading derives it as spacing·(nx − 1).
std::string encode_history(const ThermalHistory& history);
ThermalHistory decode_history(std::string_view bytes);
void persist_history(const ThermalHistory& history, const std::filesystem::path& path);
ThermalHistory load_history(const std::filesystem::path& path);

/// "MGCK" container, little-endian:
///   magic, u32 version, u8 architecture, u8 aggregation, u32 layer count
///   per layer: u32 F_in, u32 F_out, u8 frozen, f64 weights (row-major), f64 biases
///   metadata: u64 iterations, u8 loss kind, f64 peak weight, f64 threshold,
///             u64 seed, f64 scaling offset, f64 scaling scale
std::string encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::string_view bytes);
void persist_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Text plan file:
///   MGPLAN 1
///   grid <side> <spacing>
///   lasers <n>
///   label <text>
///   <comma-separated node indices>   (one line per laser)
std::string encode_plan(const ScanPlan& plan);
ScanPlan decode_plan(std::string_view text);
void persist_plan(const ScanPlan& plan, const std::filesystem::path& path);
ScanPlan load_plan(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::string train_trace_csv(const std::vector<TraceRow>& trace);
std::string tune_trace_csv(const TuneTrace& trace);
std::string error_curve_csv(const std::vector<double>& rmse);
std::string frame_metrics_csv(const std::vector<FrameMetrics>& frames);
std::string field_csv(const GridSpec& grid, const Eigen::VectorXd& temperature);

}  // namespace pbfgnn
