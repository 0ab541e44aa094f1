#pragma once

#include "sagnas/search.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sagnas {

struct ExpansionConfig {
  int iterations = 3;
  /// Parent neighbours added per subgraph node per iteration.
  Index neighbors = 2;
  /// Split a uniformly chosen node instead of the highest-entropy one.
  bool random_split = false;
  SearchConfig search;
  std::uint64_t seed = 0;
};

/// Intermediate node with the largest node entropy (lowest index on ties).
int select_split_node(const CellTopology& topology, const AlphaTable& alphas);

/// Sum of node entropies over `group`. Throws std::invalid_argument if the group is
/// empty or holds a non-intermediate node.
double unstable_group_entropy(const CellTopology& topology, const AlphaTable& alphas, std::span<const int> group);

struct ExpansionState {
  SupernetModel model;
  Subgraph subgraph;
  int iteration = 0;
};

/// One split: pick the node, split it, grow the subgraph, then run the localized
/// search on the fresh edges. The returned record is also appended to the model
/// topology's split history.
SplitRecord expand_iteration(ExpansionState& state, const Graph& parent, const ExpansionConfig& cfg);

struct ExpansionResult {
  ExpansionState state;
  DerivedArchitecture architecture;
  std::vector<SplitRecord> history;
  double seed_overall_entropy = 0.0;
};

ExpansionResult run_expansion(ExpansionState initial, const Graph& parent, const ExpansionConfig& cfg);

}  // namespace sagnas
