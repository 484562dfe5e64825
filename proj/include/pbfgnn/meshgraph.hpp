#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pbfgnn/scanpath.hpp"

namespace pbfgnn {

/// Undirected mesh graph. Self-loops are never stored here; the propagation
/// matrix adds them.
struct MeshGraph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;
  Eigen::MatrixX3d coordinates;  // mm
  Eigen::VectorXi node_type;     // 0 boundary, 1 internal
};

/// 4-neighbour graph of the grid, perimeter nodes typed 0.
MeshGraph grid_to_graph(const GridSpec& grid);

/// Relabels nodes: node v of `g` becomes node perm[v].
MeshGraph permute_graph(const MeshGraph& g, std::span<const int> perm);

enum class Aggregation { Symmetric, Mean };

std::string aggregation_name(Aggregation a);
Aggregation parse_aggregation(const std::string& name);

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PropagationMatrix {
  SparseRowMatrix matrix;
  SparseRowMatrix transpose;
  Aggregation mode = Aggregation::Mean;

  Eigen::Index size() const { return matrix.rows(); }
};

/// Â = A + I, then D̂^{-1/2} Â D̂^{-1/2} (Symmetric) or D̂^{-1} Â (Mean).
PropagationMatrix propagation_matrix(const MeshGraph& graph, Aggregation mode);

/// P·M with each output entry summed in ascending order of its terms, so the
/// result is bitwise independent of node labelling.
RowMatrix propagate(const PropagationMatrix& p, const RowMatrix& m);

/// Laser-column layout: `duplication` copies of the one-hot focal vector, each
/// scaled by `amplification`. Single-laser models use (1, 1).
struct FeatureVariant {
  int duplication = 1;
  double amplification = 1.0;

  static FeatureVariant single_laser() { return {1, 1.0}; }
  static FeatureVariant multi_laser(int a, double b) { return {a, b}; }

  int width() const { return 5 + duplication; }
  bool operator==(const FeatureVariant&) const = default;
};

constexpr int kTemperatureColumn = 4;

/// Columns: x, y, z, node_type, T_{t-1}, laser columns.
Eigen::MatrixXd assemble_features(const Eigen::VectorXd& previous, const MeshGraph& graph,
                                  std::span<const int> focal, const FeatureVariant& variant);

struct GraphSample {
  std::shared_ptr<const PropagationMatrix> propagation;
  Eigen::MatrixXd features;
  Eigen::VectorXd target;
  int timestep = 0;
  std::string case_label;
};

}  // namespace pbfgnn
