#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sagnas {

using Index = std::int64_t;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class NodeSplit : std::uint8_t { none = 0, train = 1, val = 2, test = 3 };

/// Undirected node-classification graph in CSR form. Immutable after construction.
///
/// Invariants: column indices strictly increasing per row, no self loops,
/// symmetric pattern, labels in [0, num_classes).
class Graph {
 public:
  Graph() = default;

  /// Validates the CSR arrays; throws DataError on any violated invariant.
  Graph(std::vector<Index> row_offsets, std::vector<Index> col_indices, Matrix features,
        std::vector<int> labels, std::vector<NodeSplit> split, int num_classes);

  /// Builds from an arbitrary edge list: symmetrizes, drops self loops and duplicates.
  static Graph from_edges(Index num_nodes, std::span<const std::pair<Index, Index>> edges, Matrix features,
                          std::vector<int> labels, std::vector<NodeSplit> split, int num_classes = -1);

  Index num_nodes() const { return static_cast<Index>(labels_.size()); }
  /// Undirected edge count (each pair counted once).
  Index num_edges() const { return static_cast<Index>(col_indices_.size()) / 2; }
  Index degree(Index v) const { return row_offsets_[v + 1] - row_offsets_[v]; }
  std::span<const Index> neighbors(Index v) const {
    return {col_indices_.data() + row_offsets_[v], static_cast<std::size_t>(degree(v))};
  }
  bool has_edge(Index u, Index v) const;

  const std::vector<Index>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_indices() const { return col_indices_; }
  const Matrix& features() const { return features_; }
  Index feature_dim() const { return features_.cols(); }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<NodeSplit>& split() const { return split_; }
  int num_classes() const { return num_classes_; }

  /// Node indices assigned to `which`, ascending.
  std::vector<Index> nodes_in(NodeSplit which) const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  Matrix features_;
  std::vector<int> labels_;
  std::vector<NodeSplit> split_;
  int num_classes_ = 0;
};

/// A constant sparse operator together with its transpose (used by backprop).
struct SparseOperator {
  SparseMatrix forward;
  SparseMatrix transpose;

  static SparseOperator from(SparseMatrix m);
  Index rows() const { return forward.rows(); }
};

/// D̃^{-1/2}(A + I)D̃^{-1/2}. Symmetric, diagonal 1/(deg+1), all values in (0, 1].
SparseMatrix normalize_adjacency(const Graph& g);

/// The fixed propagation operators a graph exposes to the GNN operations.
struct GraphOperators {
  SparseOperator normalized;  // Ã
  SparseOperator adjacency;   // A, unit weights, no self loops
  SparseOperator mean;        // D^{-1} A; isolated rows empty

  static GraphOperators build(const Graph& g);
};

/// Induced subgraph with a local→global node map.
struct Subgraph {
  Graph graph;
  std::vector<Index> node_map;
  std::string parent_id;
};

struct SbmParams {
  std::vector<Index> block_sizes;
  double p_in = 0.3;
  double p_out = 0.01;
  Index feat_dim = 16;
  double noise = 1.0;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Stochastic block model: labels are block ids, features one-hot block signal plus N(0, noise²).
Graph generate_sbm(const SbmParams& params);

/// Random train/val/test assignment with the given fractions (rest is test).
std::vector<NodeSplit> random_split(Index n, double train_fraction, double val_fraction, std::uint64_t seed);

/// Induced subgraph over `nodes` in the given order. Parent masks are inherited;
/// nodes the parent left unassigned are drawn into train/val (60/40) from `split_seed`.
Subgraph induced_subgraph(const Graph& g, std::span<const Index> nodes, std::string parent_id = "G",
                          std::uint64_t split_seed = 0);

}  // namespace sagnas
