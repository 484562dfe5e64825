#include "pbfgnn/meshgraph.hpp"

#include <algorithm>
#include <cmath>

#include "pbfgnn/error.hpp"

namespace pbfgnn {

MeshGraph grid_to_graph(const GridSpec& grid) {
  MeshGraph g;
  g.node_count = grid.node_count();
  g.coordinates.resize(g.node_count, 3);
  g.node_type.resize(g.node_count);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const int v = grid.index(i, j);
      g.coordinates.row(v) << i * grid.node_spacing, j * grid.node_spacing, 0.0;
      const bool perimeter = i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1;
      g.node_type[v] = perimeter ? 0 : 1;
      if (i + 1 < grid.nx) g.edges.emplace_back(v, grid.index(i + 1, j));
      if (j + 1 < grid.ny) g.edges.emplace_back(v, grid.index(i, j + 1));
    }
  }
  return g;
}

MeshGraph permute_graph(const MeshGraph& g, std::span<const int> perm) {
  if (static_cast<int>(perm.size()) != g.node_count) throw InvalidArgument("permutation size mismatch");
  MeshGraph out;
  out.node_count = g.node_count;
  out.coordinates.resize(g.node_count, 3);
  out.node_type.resize(g.node_count);
  for (int v = 0; v < g.node_count; ++v) {
    out.coordinates.row(perm[v]) = g.coordinates.row(v);
    out.node_type[perm[v]] = g.node_type[v];
  }
  for (auto [a, b] : g.edges) out.edges.emplace_back(perm[a], perm[b]);
  return out;
}

std::string aggregation_name(Aggregation a) { return a == Aggregation::Mean ? "mean" : "symmetric"; }

Aggregation parse_aggregation(const std::string& name) {
  if (name == "mean") return Aggregation::Mean;
  if (name == "symmetric") return Aggregation::Symmetric;
  throw InvalidArgument("unknown aggregation mode '" + name + "'");
}

PropagationMatrix propagation_matrix(const MeshGraph& graph, Aggregation mode) {
  const int n = graph.node_count;
  std::vector<double> degree(n, 1.0);
  for (auto [a, b] : graph.edges) {
    if (a == b) throw InvalidArgument("self-edge in mesh graph");
    if (a < 0 || b < 0 || a >= n || b >= n) throw InvalidArgument("edge endpoint out of range");
    degree[a] += 1.0;
    degree[b] += 1.0;
  }
  auto weight = [&](int row, int col) {
    return mode == Aggregation::Mean ? 1.0 / degree[row]
                                     : 1.0 / std::sqrt(degree[row] * degree[col]);
  };
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) + 2 * graph.edges.size());
  for (int v = 0; v < n; ++v) triplets.emplace_back(v, v, weight(v, v));
  for (auto [a, b] : graph.edges) {
    triplets.emplace_back(a, b, weight(a, b));
    triplets.emplace_back(b, a, weight(b, a));
  }
  PropagationMatrix p;
  p.mode = mode;
  p.matrix.resize(n, n);
  p.matrix.setFromTriplets(triplets.begin(), triplets.end());
  p.matrix.makeCompressed();
  p.transpose = p.matrix.transpose();
  p.transpose.makeCompressed();
  return p;
}

RowMatrix propagate(const PropagationMatrix& p, const RowMatrix& m) {
  const auto& a = p.matrix;
  if (a.cols() != m.rows()) throw InvalidArgument("propagation size does not match feature rows");
  const Eigen::Index cols = m.cols();
  RowMatrix out(a.rows(), cols);
  const int* outer = a.outerIndexPtr();
  const int* inner = a.innerIndexPtr();
  const double* values = a.valuePtr();
  RowMatrix terms;
  Eigen::Array<double, 1, Eigen::Dynamic> lo(cols);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const int d = outer[r + 1] - outer[r];
    if (terms.rows() < d) terms.resize(d, cols);
    for (int k = 0; k < d; ++k) terms.row(k) = values[outer[r] + k] * m.row(inner[outer[r] + k]);
    // odd-even transposition sort of every column, d rounds
    for (int round = 0; round < d; ++round) {
      for (int k = round % 2; k + 1 < d; k += 2) {
        lo = terms.row(k).array().min(terms.row(k + 1).array());
        terms.row(k + 1) = terms.row(k).cwiseMax(terms.row(k + 1));
        terms.row(k) = lo.matrix();
      }
    }
    out.row(r).setZero();
    for (int k = 0; k < d; ++k) out.row(r) += terms.row(k);
  }
  return out;
}

Eigen::MatrixXd assemble_features(const Eigen::VectorXd& previous, const MeshGraph& graph,
                                  std::span<const int> focal, const FeatureVariant& variant) {
  const int n = graph.node_count;
  if (previous.size() != n) throw InvalidArgument("temperature frame length does not match graph");
  if (variant.duplication < 1) throw InvalidArgument("feature duplication must be >= 1");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, variant.width());
  x.leftCols(3) = graph.coordinates;
  x.col(3) = graph.node_type.cast<double>();
  x.col(kTemperatureColumn) = previous;
  for (int node : focal) {
    if (node < 0 || node >= n) throw InvalidArgument("focal node " + std::to_string(node) + " out of range");
    for (int d = 0; d < variant.duplication; ++d) x(node, 5 + d) = variant.amplification;
  }
  return x;
}

}  // namespace pbfgnn
