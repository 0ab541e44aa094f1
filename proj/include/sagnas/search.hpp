#pragma once

#include "sagnas/supernet.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace sagnas {

enum class SearchPhase { weights, alpha };

struct SearchConfig {
  int epochs_search = 40;
  int epochs_eval = 50;
  double lr_w = 0.01;
  double lr_alpha = 0.05;
  double weight_decay = 5e-4;
  /// Weight of the entropy regularizer in the α objective (localized search only).
  double lambda = 0.1;
  /// Fraction of labeled (train ∪ val) nodes that drive the weight step; the rest drive α.
  double train_ratio = 0.5;
  std::uint64_t seed = 0;
  /// Called after every optimizer step of the search loop.
  std::function<void(const SupernetModel&, int epoch, SearchPhase)> observer;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Disjoint node sets for the two levels of the search.
struct SearchSplit {
  std::vector<Index> weight_rows;
  std::vector<Index> alpha_rows;
};

SearchSplit make_search_split(const Graph& data, double train_ratio, std::uint64_t seed);

struct SearchTrace {
  std::vector<double> train_loss;  // one value per weight step
  std::vector<double> val_loss;    // α objective per α step
};

struct SearchResult {
  SupernetModel model;
  DerivedArchitecture architecture;
  SearchTrace trace;
};

/// First-order bi-level search: each epoch takes one Adam step on the weights
/// (training loss, α constant) and then one on α (validation loss, weights constant).
SearchResult darts_search(const Graph& data, const CellTopology& topology, const OpSpace& ops, Index hidden,
                          int cells, const SearchConfig& cfg, NodeNorm node_norm = NodeNorm::layer);

/// The same alternation restricted to `trainable_edges`; every other edge must already be
/// frozen. The α objective is L_val + λ·(overall entropy). All weights keep training.
SearchTrace localized_search(SupernetModel& model, std::span<const int> trainable_edges, const Graph& data,
                             const SearchConfig& cfg);

struct EvalResult {
  double val_accuracy = 0.0;
  std::optional<double> test_accuracy;
  std::vector<double> loss_curve;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Trains the discretized architecture from fresh weights for cfg.epochs_eval full-batch
/// epochs on the train mask and reports accuracy on val (and test when present).
EvalResult train_eval(const DerivedArchitecture& arch, const Graph& data, const SearchConfig& cfg, std::uint64_t seed);

/// Fraction of `rows` whose argmax logit (lowest index on ties) equals the label.
double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const Index> rows);

}  // namespace sagnas
