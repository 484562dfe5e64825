#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbfgnn/material.hpp"

namespace pbfgnn {

/// Square or rectangular node grid. Node (i, j) sits at (i·s, j·s) and has
/// index j·nx + i; j grows toward the "top" of the domain.
struct GridSpec {
  double side_length = 2.0;  // mm
  double node_spacing = 0.05;
  int nx = 41;
  int ny = 41;

  int node_count() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
  int column(int node) const { return node % nx; }
  int row(int node) const { return node / nx; }

  bool operator==(const GridSpec&) const = default;
};

/// Square grid of side `side_length` with node spacing `spacing`; throws
/// InvalidArgument unless the side is an integer number of cells.
GridSpec make_grid(double side_length, double spacing);

/// Half-open rectangle of node columns [i0, i0 + ni) and rows [j0, j0 + nj).
struct NodeRect {
  int i0 = 0;
  int j0 = 0;
  int ni = 0;
  int nj = 0;

  bool empty() const { return ni <= 0 || nj <= 0; }
  int count() const { return ni * nj; }
  bool operator==(const NodeRect&) const = default;
};

NodeRect full_rect(const GridSpec& grid);

enum class RasterOrientation { Lateral, Longitudinal };
enum class Corner { BottomLeft, BottomRight, TopLeft, TopRight };

using NodePath = std::vector<int>;

struct ScanPlan {
  GridSpec grid;
  std::vector<NodePath> paths;  // one per laser
  std::string label;

  int laser_count() const { return static_cast<int>(paths.size()); }
  bool operator==(const ScanPlan&) const = default;
};

/// Exact n!; throws for n > 20.
std::uint64_t factorial(int n);

/// Island orders for a domain cut into square islands. Returns every
/// permutation (lexicographic) when n! <= limit, otherwise `limit` distinct
/// seeded Fisher-Yates shuffles. Islands are numbered 1..n row-major from the
/// top-left island.
std::vector<std::vector<int>> enumerate_island_sequences(const GridSpec& grid, double island_size,
                                                         std::size_t limit, std::uint64_t seed);

/// Node rectangle covered by island `number` (1-based). Islands partition
/// the grid; the last island in each direction absorbs the closing node line.
NodeRect island_rect(const GridSpec& grid, double island_size, int number);

NodePath raster_path(const GridSpec& grid, const NodeRect& region, RasterOrientation orientation,
                     Corner start);
/// Clockwise rectangular spiral from the bottom-left corner toward the
/// centre; `inward == false` returns the reversed walk.
NodePath spiral_path(const GridSpec& grid, const NodeRect& region, bool inward);
/// Order-k Hilbert curve over a 2^k × 2^k region.
NodePath hilbert_path(const GridSpec& grid, const NodeRect& region);

/// Single laser printing islands in `sequence`, each filled with a lateral
/// serpentine starting at its lower-left corner.
ScanPlan island_plan(const GridSpec& grid, double island_size, const std::vector<int>& sequence);

/// Splits the grid into `parts` vertical strips whose column counts differ by at most one.
std::vector<NodeRect> partition_columns(const GridSpec& grid, int parts);

struct LaserFill {
  Corner start = Corner::BottomLeft;
  RasterOrientation orientation = RasterOrientation::Lateral;
};

ScanPlan multi_laser_plan(const GridSpec& grid, const std::vector<LaserFill>& fills);
/// Full-factorial design over (4 corners × 2 orientations) per laser: 8^lasers plans.
std::vector<ScanPlan> multi_laser_doe(const GridSpec& grid, int lasers = 3);

/// One inward spiral per laser strip.
ScanPlan spiral_plan(const GridSpec& grid, int lasers);
/// One Hilbert square per laser strip (largest power-of-two side that fits,
/// centred in the strip).
ScanPlan hilbert_plan(const GridSpec& grid, int lasers);

/// Empty when valid; otherwise one line per violation. `full_coverage`
/// additionally demands every node be visited exactly once.
std::vector<std::string> validate_plan(const ScanPlan& plan, bool full_coverage);

/// Lasers advance in lockstep, one node per step.
struct LaserSchedule {
  struct Entry {
    int laser;
    int node;
    bool operator==(const Entry&) const = default;
  };
  std::vector<std::vector<Entry>> steps;
  double dwell = 0.0;  // s per step
  GridSpec grid;

  std::size_t timestep_count() const { return steps.size(); }
  std::vector<int> focal_nodes(std::size_t t) const;
};

LaserSchedule compile_schedule(const ScanPlan& plan, const ProcessParams& params);

std::string corner_name(Corner c);
std::string orientation_name(RasterOrientation o);

}  // namespace pbfgnn
