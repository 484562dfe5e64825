#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <set>

#include "pbfgnn/error.hpp"
#include "pbfgnn/scanpath.hpp"

using namespace pbfgnn;

namespace {

bool adjacent(const GridSpec& g, int a, int b) {
  return std::abs(g.column(a) - g.column(b)) + std::abs(g.row(a) - g.row(b)) == 1;
}

// Every node of the rectangle exactly once, nothing else.
bool covers_exactly(const GridSpec& g, const NodePath& path, const NodeRect& r) {
  if (static_cast<int>(path.size()) != r.count()) return false;
  std::set<int> seen(path.begin(), path.end());
  if (seen.size() != path.size()) return false;
  for (int v : path) {
    const int i = g.column(v), j = g.row(v);
    if (i < r.i0 || i >= r.i0 + r.ni || j < r.j0 || j >= r.j0 + r.nj) return false;
  }
  return true;
}

bool all_hops_adjacent(const GridSpec& g, const NodePath& path) {
  for (std::size_t k = 1; k < path.size(); ++k)
    if (!adjacent(g, path[k - 1], path[k])) return false;
  return true;
}

}  // namespace

TEST_CASE("make_grid") {
  const GridSpec a = make_grid(2.0, 0.05);
  CHECK(a.nx == 41);
  CHECK(a.ny == 41);
  CHECK(a.node_count() == 1681);
  CHECK(make_grid(3.0, 0.05).nx == 61);
  CHECK(make_grid(4.0, 0.05).nx == 81);
  CHECK_THROWS_AS(make_grid(2.0, 0.03), InvalidArgument);
  CHECK_THROWS_AS(make_grid(0.0, 0.05), InvalidArgument);
  CHECK(a.index(3, 2) == 2 * 41 + 3);
  CHECK(a.column(a.index(3, 2)) == 3);
  CHECK(a.row(a.index(3, 2)) == 2);
}

TEST_CASE("enumerate_island_sequences") {
  const auto a = enumerate_island_sequences(make_grid(2.0, 0.05), 1.0, 100, 0);
  CHECK(a.size() == 24);
  CHECK(std::set<std::vector<int>>(a.begin(), a.end()).size() == 24);
  for (const auto& s : a) {
    std::vector<int> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{1, 2, 3, 4});
  }

  const auto b = enumerate_island_sequences(make_grid(3.0, 0.05), 1.0, 10, 42);
  CHECK(b.size() == 10);
  CHECK(std::set<std::vector<int>>(b.begin(), b.end()).size() == 10);
  for (const auto& s : b) CHECK(s.size() == 9);
  CHECK(enumerate_island_sequences(make_grid(3.0, 0.05), 1.0, 10, 42) == b);
  CHECK(enumerate_island_sequences(make_grid(3.0, 0.05), 1.0, 10, 43) != b);

  const auto one = enumerate_island_sequences(make_grid(1.0, 0.05), 1.0, 5, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == std::vector<int>{1});

  CHECK_THROWS_AS(enumerate_island_sequences(make_grid(2.0, 0.05), 0.75, 10, 0), InvalidArgument);
}

TEST_CASE("factorial is exact") {
  CHECK(factorial(4) == 24);
  CHECK(factorial(9) == 362880);
  CHECK(factorial(16) == 20922789888000ULL);
  CHECK_THROWS_AS(factorial(21), InvalidArgument);
}

TEST_CASE("raster_path") {
  const GridSpec g = make_grid(0.5, 0.05);  // 11×11
  const NodeRect r2{4, 4, 2, 2};
  const NodePath p = raster_path(g, r2, RasterOrientation::Lateral, Corner::TopLeft);
  REQUIRE(covers_exactly(g, p, r2));
  CHECK(g.row(p[0]) == 5);
  CHECK(g.row(p[1]) == 5);
  CHECK(g.column(p[0]) == 4);

  const NodeRect r3{2, 3, 3, 3};
  for (auto o : {RasterOrientation::Lateral, RasterOrientation::Longitudinal})
    for (auto c : {Corner::BottomLeft, Corner::BottomRight, Corner::TopLeft, Corner::TopRight}) {
      const NodePath q = raster_path(g, r3, o, c);
      CHECK(q.size() == 9);
      CHECK(covers_exactly(g, q, r3));
      CHECK(all_hops_adjacent(g, q));
    }

  const NodeRect strip{6, 0, 1, 5};
  const NodePath s = raster_path(g, strip, RasterOrientation::Longitudinal, Corner::BottomLeft);
  REQUIRE(s.size() == 5);
  for (int k = 0; k < 5; ++k) CHECK(s[static_cast<std::size_t>(k)] == g.index(6, k));

  CHECK_THROWS_AS(raster_path(g, NodeRect{0, 0, 0, 3}, RasterOrientation::Lateral, Corner::BottomLeft),
                  InvalidArgument);
}

TEST_CASE("spiral_path") {
  const GridSpec g = make_grid(0.5, 0.05);
  const NodeRect r3{1, 1, 3, 3};
  const NodePath p = spiral_path(g, r3, true);
  REQUIRE(p.size() == 9);
  CHECK(covers_exactly(g, p, r3));
  CHECK(all_hops_adjacent(g, p));
  CHECK(p.back() == g.index(2, 2));
  NodePath out = spiral_path(g, r3, false);
  std::reverse(out.begin(), out.end());
  CHECK(out == p);

  CHECK(spiral_path(g, NodeRect{5, 5, 1, 1}, true) == NodePath{g.index(5, 5)});
  const NodeRect r2{0, 0, 2, 2};
  CHECK(covers_exactly(g, spiral_path(g, r2, true), r2));

  for (int ni = 1; ni <= 6; ++ni)
    for (int nj = 1; nj <= 6; ++nj) {
      const NodeRect r{2, 1, ni, nj};
      const NodePath q = spiral_path(g, r, true);
      CHECK(covers_exactly(g, q, r));
      CHECK(all_hops_adjacent(g, q));
    }
  CHECK_THROWS_AS(spiral_path(g, NodeRect{0, 0, 2, 0}, true), InvalidArgument);
}

TEST_CASE("hilbert_path") {
  const GridSpec g = make_grid(1.0, 0.05);  // 21×21
  for (int side : {1, 2, 4, 8, 16}) {
    const NodeRect r{1, 2, side, side};
    const NodePath p = hilbert_path(g, r);
    CHECK(p.size() == static_cast<std::size_t>(side * side));
    CHECK(covers_exactly(g, p, r));
    CHECK(all_hops_adjacent(g, p));
  }
  CHECK_THROWS_AS(hilbert_path(g, NodeRect{0, 0, 3, 3}), InvalidArgument);
  CHECK_THROWS_AS(hilbert_path(g, NodeRect{0, 0, 4, 2}), InvalidArgument);
}

TEST_CASE("island plans cover the domain exactly once") {
  const GridSpec g = make_grid(2.0, 0.05);
  for (const auto& seq : enumerate_island_sequences(g, 1.0, 100, 0)) {
    const ScanPlan plan = island_plan(g, 1.0, seq);
    CHECK(plan.laser_count() == 1);
    CHECK(validate_plan(plan, true).empty());
  }
  const GridSpec b = make_grid(3.0, 0.05);
  const ScanPlan pb = island_plan(b, 1.0, {7, 4, 1, 8, 5, 2, 9, 6, 3});
  CHECK(validate_plan(pb, true).empty());
  CHECK(pb.paths[0].size() == 61u * 61u);
}

TEST_CASE("island rectangles partition the grid") {
  const GridSpec g = make_grid(3.0, 0.05);
  std::vector<int> count(static_cast<std::size_t>(g.node_count()), 0);
  for (int k = 1; k <= 9; ++k) {
    const NodeRect r = island_rect(g, 1.0, k);
    for (int j = r.j0; j < r.j0 + r.nj; ++j)
      for (int i = r.i0; i < r.i0 + r.ni; ++i) ++count[static_cast<std::size_t>(g.index(i, j))];
  }
  CHECK(std::all_of(count.begin(), count.end(), [](int c) { return c == 1; }));
  // Island 1 is the top-left one.
  const NodeRect first = island_rect(g, 1.0, 1);
  CHECK(first.i0 == 0);
  CHECK(first.j0 + first.nj == g.ny);
}

TEST_CASE("multi-laser design of experiments") {
  const GridSpec g = make_grid(2.0, 0.05);
  const auto strips = partition_columns(g, 3);
  REQUIRE(strips.size() == 3);
  int total = 0;
  for (const auto& s : strips) total += s.ni;
  CHECK(total == g.nx);
  CHECK(std::abs(strips[0].ni - strips[2].ni) <= 1);

  const auto doe = multi_laser_doe(g, 3);
  CHECK(doe.size() == 512);
  std::set<std::vector<NodePath>> distinct;
  std::set<std::string> labels;
  for (const auto& p : doe) {
    CHECK(p.laser_count() == 3);
    CHECK(validate_plan(p, true).empty());
    for (const auto& path : p.paths) CHECK(all_hops_adjacent(g, path));
    distinct.insert(p.paths);
    labels.insert(p.label);
  }
  CHECK(distinct.size() == 512);
  CHECK(labels.size() == 512);
}

TEST_CASE("spiral and Hilbert multi-laser plans") {
  const GridSpec g = make_grid(2.0, 0.05);
  const ScanPlan s = spiral_plan(g, 3);
  CHECK(s.laser_count() == 3);
  CHECK(validate_plan(s, true).empty());
  const ScanPlan h = hilbert_plan(g, 3);
  CHECK(h.laser_count() == 3);
  CHECK(validate_plan(h, false).empty());
  for (const auto& p : h.paths) {
    CHECK(p.size() == 64u);
    CHECK(all_hops_adjacent(g, p));
  }
}

TEST_CASE("validate_plan reports violations") {
  const GridSpec g = make_grid(0.2, 0.05);  // 5×5
  ScanPlan p{g, {{0, 1, 2}, {2, 3}}, "overlap"};
  CHECK(validate_plan(p, false).empty());
  CHECK_FALSE(validate_plan(p, true).empty());
  p.paths = {{0, 1, 99}};
  CHECK_FALSE(validate_plan(p, false).empty());
  p.paths = {{0, 1, 2}};
  CHECK(validate_plan(p, false).empty());
  CHECK_FALSE(validate_plan(p, true).empty());
}

TEST_CASE("compile_schedule") {
  const GridSpec g = make_grid(2.0, 0.05);
  ProcessParams params;
  ScanPlan one{g, {NodePath(1600)}, "single"};
  for (int k = 0; k < 1600; ++k) one.paths[0][static_cast<std::size_t>(k)] = k;
  const LaserSchedule s = compile_schedule(one, params);
  CHECK(s.timestep_count() == 1600);
  CHECK(s.dwell == doctest::Approx(4.1667e-5).epsilon(1e-4));
  CHECK(s.dwell == 0.05 / 1200.0);

  ScanPlan three{g, {NodePath(500), NodePath(400), NodePath(300)}, "ragged"};
  for (int l = 0; l < 3; ++l)
    for (std::size_t k = 0; k < three.paths[static_cast<std::size_t>(l)].size(); ++k)
      three.paths[static_cast<std::size_t>(l)][k] = 500 * l + static_cast<int>(k);
  const LaserSchedule r = compile_schedule(three, params);
  CHECK(r.timestep_count() == 500);
  CHECK(r.steps[0].size() == 3);
  CHECK(r.steps[350].size() == 2);
  CHECK(r.steps[450].size() == 1);
  CHECK(r.steps[450][0].laser == 0);
  CHECK(r.focal_nodes(450) == std::vector<int>{450});

  ScanPlan equal{g, {NodePath(500), NodePath(500), NodePath(500)}, "equal"};
  for (int l = 0; l < 3; ++l)
    for (std::size_t k = 0; k < 500; ++k) equal.paths[static_cast<std::size_t>(l)][k] = 500 * l + static_cast<int>(k);
  const LaserSchedule e = compile_schedule(equal, params);
  CHECK(e.timestep_count() == 500);
  for (const auto& step : e.steps) CHECK(step.size() == 3);
}
