#include "pbfgnn/scanpath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "pbfgnn/error.hpp"

namespace pbfgnn {

namespace {

int integer_ratio(double num, double den, const char* what) {
  double r = num / den;
  double rounded = std::round(r);
  if (!(rounded >= 1.0) || std::abs(r - rounded) > 1e-9 * std::max(1.0, std::abs(r)))
    throw InvalidArgument(std::string(what) + ": " + std::to_string(num) +
                          " is not an integer multiple of " + std::to_string(den));
  return static_cast<int>(rounded);
}

void check_region(const GridSpec& grid, const NodeRect& r) {
  if (r.empty()) throw InvalidArgument("empty node region");
  if (r.i0 < 0 || r.j0 < 0 || r.i0 + r.ni > grid.nx || r.j0 + r.nj > grid.ny)
    throw InvalidArgument("node region exceeds the grid");
}

}  // namespace

GridSpec make_grid(double side_length, double spacing) {
  if (!(side_length > 0.0) || !(spacing > 0.0))
    throw InvalidArgument("grid side and spacing must be positive");
  int cells = integer_ratio(side_length, spacing, "grid side");
  GridSpec g;
  // Stored as spacing·cells so a grid is fully determined by (nx, ny, spacing).
  g.side_length = spacing * cells;
  g.node_spacing = spacing;
  g.nx = g.ny = cells + 1;
  return g;
}

NodeRect full_rect(const GridSpec& grid) { return {0, 0, grid.nx, grid.ny}; }

std::uint64_t factorial(int n) {
  if (n < 0 || n > 20) throw InvalidArgument("factorial argument out of range: " + std::to_string(n));
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) f *= static_cast<std::uint64_t>(k);
  return f;
}

namespace {

struct IslandLayout {
  int per_side;
  int cells_per_island;
};

IslandLayout island_layout(const GridSpec& grid, double island_size) {
  int per_side = integer_ratio(grid.side_length, island_size, "island size");
  int cells = grid.nx - 1;
  if (cells % per_side != 0)
    throw InvalidArgument("island boundaries do not fall on grid lines");
  return {per_side, cells / per_side};
}

}  // namespace

std::vector<std::vector<int>> enumerate_island_sequences(const GridSpec& grid, double island_size,
                                                         std::size_t limit, std::uint64_t seed) {
  const auto layout = island_layout(grid, island_size);
  const int n = layout.per_side * layout.per_side;

  std::vector<int> base(n);
  std::iota(base.begin(), base.end(), 1);
  std::vector<std::vector<int>> out;

  bool exhaustive = n <= 20 && factorial(n) <= limit;
  if (exhaustive) {
    do {
      out.push_back(base);
    } while (std::next_permutation(base.begin(), base.end()));
    return out;
  }

  std::mt19937_64 rng(seed);
  std::set<std::vector<int>> seen;
  while (out.size() < limit) {
    std::vector<int> perm = base;
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    if (seen.insert(perm).second) out.push_back(std::move(perm));
  }
  return out;
}

NodeRect island_rect(const GridSpec& grid, double island_size, int number) {
  const auto layout = island_layout(grid, island_size);
  const int m = layout.per_side;
  if (number < 1 || number > m * m) throw InvalidArgument("island number out of range");
  const int c = layout.cells_per_island;
  int row_from_top = (number - 1) / m;
  int col = (number - 1) % m;
  int row = m - 1 - row_from_top;
  NodeRect r;
  r.i0 = col * c;
  r.ni = c + (col == m - 1 ? 1 : 0);
  r.j0 = row * c;
  r.nj = c + (row == m - 1 ? 1 : 0);
  return r;
}

NodePath raster_path(const GridSpec& grid, const NodeRect& region, RasterOrientation orientation,
                     Corner start) {
  check_region(grid, region);
  const bool from_left = start == Corner::BottomLeft || start == Corner::TopLeft;
  const bool from_bottom = start == Corner::BottomLeft || start == Corner::BottomRight;
  NodePath path;
  path.reserve(region.count());

  if (orientation == RasterOrientation::Lateral) {
    bool forward = from_left;
    for (int k = 0; k < region.nj; ++k) {
      int j = from_bottom ? region.j0 + k : region.j0 + region.nj - 1 - k;
      for (int m = 0; m < region.ni; ++m) {
        int i = forward ? region.i0 + m : region.i0 + region.ni - 1 - m;
        path.push_back(grid.index(i, j));
      }
      forward = !forward;
    }
  } else {
    bool upward = from_bottom;
    for (int k = 0; k < region.ni; ++k) {
      int i = from_left ? region.i0 + k : region.i0 + region.ni - 1 - k;
      for (int m = 0; m < region.nj; ++m) {
        int j = upward ? region.j0 + m : region.j0 + region.nj - 1 - m;
        path.push_back(grid.index(i, j));
      }
      upward = !upward;
    }
  }
  return path;
}

NodePath spiral_path(const GridSpec& grid, const NodeRect& region, bool inward) {
  check_region(grid, region);
  int left = region.i0, right = region.i0 + region.ni - 1;
  int bottom = region.j0, top = region.j0 + region.nj - 1;
  NodePath path;
  path.reserve(region.count());
  while (left <= right && bottom <= top) {
    for (int j = bottom; j <= top; ++j) path.push_back(grid.index(left, j));
    ++left;
    if (left > right) break;
    for (int i = left; i <= right; ++i) path.push_back(grid.index(i, top));
    --top;
    if (bottom > top) break;
    for (int j = top; j >= bottom; --j) path.push_back(grid.index(right, j));
    --right;
    if (left > right) break;
    for (int i = right; i >= left; --i) path.push_back(grid.index(i, bottom));
    ++bottom;
  }
  if (!inward) std::reverse(path.begin(), path.end());
  return path;
}

NodePath hilbert_path(const GridSpec& grid, const NodeRect& region) {
  check_region(grid, region);
  const int n = region.ni;
  if (region.nj != n || (n & (n - 1)) != 0)
    throw InvalidArgument("Hilbert region must be a square with power-of-two side");
  NodePath path;
  path.reserve(static_cast<std::size_t>(n) * n);
  for (int d = 0; d < n * n; ++d) {
    int x = 0, y = 0, t = d;
    for (int s = 1; s < n; s *= 2) {
      int rx = 1 & (t / 2);
      int ry = 1 & (t ^ rx);
      if (ry == 0) {
        if (rx == 1) {
          x = s - 1 - x;
          y = s - 1 - y;
        }
        std::swap(x, y);
      }
      x += s * rx;
      y += s * ry;
      t /= 4;
    }
    path.push_back(grid.index(region.i0 + x, region.j0 + y));
  }
  return path;
}

ScanPlan island_plan(const GridSpec& grid, double island_size, const std::vector<int>& sequence) {
  ScanPlan plan;
  plan.grid = grid;
  plan.label = "islands";
  NodePath path;
  for (int island : sequence) {
    plan.label += "-" + std::to_string(island);
    auto part = raster_path(grid, island_rect(grid, island_size, island), RasterOrientation::Lateral,
                            Corner::BottomLeft);
    path.insert(path.end(), part.begin(), part.end());
  }
  plan.paths.push_back(std::move(path));
  return plan;
}

std::vector<NodeRect> partition_columns(const GridSpec& grid, int parts) {
  if (parts < 1 || parts > grid.nx) throw InvalidArgument("cannot split grid into that many strips");
  std::vector<NodeRect> out;
  int base = grid.nx / parts, extra = grid.nx % parts;
  int i0 = 0;
  for (int p = 0; p < parts; ++p) {
    int width = base + (p < extra ? 1 : 0);
    out.push_back({i0, 0, width, grid.ny});
    i0 += width;
  }
  return out;
}

std::string corner_name(Corner c) {
  switch (c) {
    case Corner::BottomLeft: return "BL";
    case Corner::BottomRight: return "BR";
    case Corner::TopLeft: return "TL";
    case Corner::TopRight: return "TR";
  }
  return "?";
}

std::string orientation_name(RasterOrientation o) {
  return o == RasterOrientation::Lateral ? "lat" : "lon";
}

ScanPlan multi_laser_plan(const GridSpec& grid, const std::vector<LaserFill>& fills) {
  auto regions = partition_columns(grid, static_cast<int>(fills.size()));
  ScanPlan plan;
  plan.grid = grid;
  plan.label = "ml" + std::to_string(fills.size());
  for (std::size_t k = 0; k < fills.size(); ++k) {
    plan.paths.push_back(raster_path(grid, regions[k], fills[k].orientation, fills[k].start));
    plan.label += "_" + corner_name(fills[k].start) + "-" + orientation_name(fills[k].orientation);
  }
  return plan;
}

std::vector<ScanPlan> multi_laser_doe(const GridSpec& grid, int lasers) {
  static constexpr Corner corners[] = {Corner::BottomLeft, Corner::BottomRight, Corner::TopLeft,
                                       Corner::TopRight};
  static constexpr RasterOrientation orientations[] = {RasterOrientation::Lateral,
                                                       RasterOrientation::Longitudinal};
  if (lasers < 1) throw InvalidArgument("need at least one laser");
  std::size_t total = 1;
  for (int k = 0; k < lasers; ++k) total *= 8;

  std::vector<ScanPlan> plans;
  plans.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<LaserFill> fills(lasers);
    std::size_t c = code;
    for (int k = lasers - 1; k >= 0; --k) {
      std::size_t option = c % 8;
      c /= 8;
      fills[k] = {corners[option / 2], orientations[option % 2]};
    }
    plans.push_back(multi_laser_plan(grid, fills));
  }
  return plans;
}

ScanPlan spiral_plan(const GridSpec& grid, int lasers) {
  ScanPlan plan;
  plan.grid = grid;
  plan.label = "spiral" + std::to_string(lasers);
  for (const auto& r : partition_columns(grid, lasers)) plan.paths.push_back(spiral_path(grid, r, true));
  return plan;
}

ScanPlan hilbert_plan(const GridSpec& grid, int lasers) {
  ScanPlan plan;
  plan.grid = grid;
  plan.label = "hilbert" + std::to_string(lasers);
  for (const auto& strip : partition_columns(grid, lasers)) {
    int side = 1;
    while (side * 2 <= std::min(strip.ni, strip.nj)) side *= 2;
    NodeRect sq{strip.i0 + (strip.ni - side) / 2, strip.j0 + (strip.nj - side) / 2, side, side};
    plan.paths.push_back(hilbert_path(grid, sq));
  }
  return plan;
}

std::vector<std::string> validate_plan(const ScanPlan& plan, bool full_coverage) {
  std::vector<std::string> report;
  const int n = plan.grid.node_count();
  std::vector<int> visits(n, 0);
  for (std::size_t l = 0; l < plan.paths.size(); ++l) {
    for (std::size_t k = 0; k < plan.paths[l].size(); ++k) {
      int node = plan.paths[l][k];
      if (node < 0 || node >= n) {
        report.push_back("laser " + std::to_string(l) + ": node index out of range at position " +
                         std::to_string(k));
        continue;
      }
      ++visits[node];
    }
  }
  if (full_coverage) {
    for (int v = 0; v < n; ++v) {
      if (visits[v] != 1)
        report.push_back("node " + std::to_string(v) + " visited " + std::to_string(visits[v]) +
                         " times");
    }
  }
  return report;
}

std::vector<int> LaserSchedule::focal_nodes(std::size_t t) const {
  std::vector<int> out;
  out.reserve(steps.at(t).size());
  for (const auto& e : steps[t]) out.push_back(e.node);
  return out;
}

LaserSchedule compile_schedule(const ScanPlan& plan, const ProcessParams& params) {
  if (auto report = validate_plan(plan, false); !report.empty())
    throw InvalidArgument("invalid scan plan: " + report.front());
  LaserSchedule s;
  s.grid = plan.grid;
  s.dwell = plan.grid.node_spacing / params.scan_speed;
  std::size_t steps = 0;
  for (const auto& p : plan.paths) steps = std::max(steps, p.size());
  s.steps.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (int l = 0; l < plan.laser_count(); ++l) {
      if (t < plan.paths[l].size()) s.steps[t].push_back({l, plan.paths[l][t]});
    }
  }
  return s;
}

}  // namespace pbfgnn
