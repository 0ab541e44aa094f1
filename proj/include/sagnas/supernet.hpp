#pragma once

#include "sagnas/architecture.hpp"
#include "sagnas/autodiff.hpp"
#include "sagnas/binary.hpp"
#include "sagnas/entropy.hpp"
#include "sagnas/ops.hpp"
#include "sagnas/topology.hpp"

#include <optional>
#include <vector>

namespace sagnas {

/// Ordered candidate operation set: a subsequence of the registry.
class OpSpace {
 public:
  OpSpace();  // full registry
  explicit OpSpace(std::vector<OpKind> ops);

  std::size_t size() const { return ops_.size(); }
  OpKind operator[](std::size_t i) const { return ops_[i]; }
  const std::vector<OpKind>& ops() const { return ops_; }
  /// Position of `kind`, or -1.
  int index_of(OpKind kind) const;

  friend bool operator==(const OpSpace&, const OpSpace&) = default;

 private:
  std::vector<OpKind> ops_;
};

/// Architecture weights of one edge. A frozen edge is one-hot on `frozen` in probability
/// and its logits are never touched again.
struct EdgeAlpha {
  Parameter logits;  // 1 × |ops|
  std::optional<int> frozen;

  bool trainable() const { return !frozen.has_value(); }
};

struct AlphaTable {
  std::vector<EdgeAlpha> edges;

  Eigen::VectorXd probabilities(std::size_t edge) const;
  double edge_entropy(std::size_t edge) const;
};

/// Mean edge entropy over the inputs of intermediate node j (frozen edges count 0).
double node_entropy(const CellTopology& topology, const AlphaTable& alphas, int j);
/// Mean node entropy over all intermediate nodes.
double overall_entropy(const CellTopology& topology, const AlphaTable& alphas);

struct ModelShape {
  Index feat_dim = 0;
  Index hidden = 64;
  int num_classes = 2;
  int cells = 1;
  NodeNorm node_norm = NodeNorm::layer;
};

struct EdgeWeights {
  std::vector<OpParams> ops;  // aligned with the OpSpace
};

struct CellWeights {
  std::vector<EdgeWeights> edges;  // aligned with topology.edges()
  Parameter output;                // (P·hidden) × hidden
};

struct ForwardMode {
  bool train_weights = true;
  bool train_alpha = false;
};

/// Softmax-weighted mixture of every candidate op (Σ_o softmax(α)_o o(H)).
/// A frozen edge evaluates only its chosen operation.
Tensor mixed_edge_forward(EdgeAlpha& alpha, EdgeWeights& weights, const OpSpace& ops, const Tensor& h,
                          const GraphOperators& graph, ForwardMode mode);

/// Stacked-cell supernet: input projection, L cells sharing one topology and one
/// AlphaTable but owning their own operation weights, and a linear classifier.
/// Cell k reads the outputs of cells k-2 and k-1 (the projected features stand in
/// for missing predecessors).
class SupernetModel {
 public:
  SupernetModel(CellTopology topology, OpSpace ops, ModelShape shape, std::uint64_t seed);

  /// Every edge frozen at the architecture's op; only chosen ops get weights.
  static SupernetModel from_architecture(const DerivedArchitecture& arch, Index feat_dim, int num_classes,
                                         std::uint64_t seed);

  Tensor forward(Tape& tape, const Matrix& features, const GraphOperators& graph, ForwardMode mode);
  /// Sum of mixed edges per intermediate node (normalized per shape().node_norm), then
  /// output projection of their concatenation. A node without live inputs outputs zeros.
  Tensor cell_forward(int cell, const Tensor& in0, const Tensor& in1, const GraphOperators& graph, ForwardMode mode);

  /// Overall entropy as a differentiable scalar (the entropy regularizer).
  Tensor entropy_regularizer(Tape& tape, bool train_alpha);

  std::vector<Parameter*> weight_parameters();
  std::vector<Parameter*> alpha_parameters();  // trainable edges only

  /// Freezes every trainable edge at its current argmax (lowest index on ties).
  void freeze_all();

  /// Splits node j. Fresh edges into j0/j1 get new α and weights; every other edge is
  /// frozen at its current discrete choice and keeps its weights; the output
  /// projections and the classifier are re-initialized.
  SupernetModel split(int j, std::uint64_t seed) const;

  std::vector<sagg::NamedTensor> state_dict() const;
  /// Copies tensors by name. With strict=true every model tensor must be present.
  void load_state_dict(const std::vector<sagg::NamedTensor>& tensors, bool strict = true);

  const CellTopology& topology() const { return topology_; }
  CellTopology& topology() { return topology_; }
  const OpSpace& ops() const { return ops_; }
  const ModelShape& shape() const { return shape_; }
  AlphaTable& alphas() { return alphas_; }
  const AlphaTable& alphas() const { return alphas_; }
  std::vector<CellWeights>& cells() { return cells_; }

 private:
  SupernetModel() = default;
  void init_dense_parts(std::uint64_t seed);
  EdgeWeights fresh_edge(int cell, int edge, std::uint64_t seed) const;
  EdgeAlpha fresh_alpha(int edge, std::uint64_t seed) const;

  CellTopology topology_;
  OpSpace ops_;
  ModelShape shape_;
  AlphaTable alphas_;
  Parameter input_;
  std::vector<CellWeights> cells_;
  Parameter classifier_;
  Parameter classifier_bias_;
};

/// argmax op per edge (lowest registry position on ties); zero-chosen edges are pruned.
/// Throws ArchitectureError if some node is left without any live input.
DerivedArchitecture discretize(const SupernetModel& model);

inline constexpr double kAlphaJitter = 1e-3;

}  // namespace sagnas
