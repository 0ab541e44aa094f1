#pragma once

#include "sagnas/search.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sagnas {

/// Validation accuracies of the K candidate architectures on one graph.
struct PerfSequence {
  std::string graph_id;
  std::vector<double> values;
};

struct KendallScore {
  int subgraph = 0;
  double tau = 0.0;
};

/// One cell of the evaluation grid.
struct PerfRun {
  int arch = 0;
  int graph = 0;  // subgraph index, or K for the full graph
  std::uint64_t seed = 0;
  double val_accuracy = 0.0;
};

struct PerfGrid {
  std::vector<PerfSequence> subgraphs;  // K sequences
  PerfSequence full;
  std::vector<PerfRun> runs;            // row-major over (arch, graph)
};

/// Seed for cell (arch, graph) of the grid.
std::uint64_t perf_seed(std::uint64_t master, int arch, int graph);

/// Trains every architecture on every subgraph and on the full graph (K×(K+1) runs),
/// spread over `workers` threads. Results do not depend on the worker count.
PerfGrid build_perf_sequences(std::span<const DerivedArchitecture> archs, std::span<const Subgraph> subgraphs,
                              const Graph& full, const SearchConfig& cfg, std::uint64_t master, int workers = 1);

enum class SelectionStrategy { rank_consistency, random, highest_on_G, highest_avg_subgraphs };

std::string_view strategy_name(SelectionStrategy s);
/// Throws ConfigError for unknown names.
SelectionStrategy parse_strategy(std::string_view name);

struct SeedSelection {
  SelectionStrategy strategy = SelectionStrategy::rank_consistency;
  int seed_subgraph = 0;
  DerivedArchitecture seed_architecture;
  std::vector<KendallScore> scores;
  PerfGrid grid;
};

/// Subgraph with the largest τ against the full-graph sequence. Ties go to the
/// subgraph whose own sequence has the higher mean, then to the lower index.
SeedSelection select_seed(const PerfGrid& grid, std::span<const DerivedArchitecture> archs);

/// Ablation selectors:
///   random                 uniform index drawn from `seed`
///   highest_on_G           argmax of the full-graph sequence
///   highest_avg_subgraphs  argmax over k of the mean accuracy across subgraphs
/// Ties go to the lower index. Scores are always filled in.
SeedSelection select_seed_variant(SelectionStrategy strategy, const PerfGrid& grid,
                                  std::span<const DerivedArchitecture> archs, std::uint64_t seed = 0);

}  // namespace sagnas
