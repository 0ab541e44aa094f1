#pragma once

#include "sagnas/graph.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace sagnas {

enum class SamplerKind { node_uniform, node_degree, cluster };

std::string_view sampler_name(SamplerKind kind);
/// Throws ConfigError for unknown names.
SamplerKind parse_sampler(std::string_view name);

struct SamplerConfig {
  SamplerKind kind = SamplerKind::node_degree;
  Index target_size = 0;
  std::uint64_t seed = 0;
};

/// Node set drawn by the configured sampler, sorted ascending.
///   node_uniform: uniform without replacement
///   node_degree:  successive draws without replacement, each ∝ deg+1
///   cluster:      BFS from a random seed node (re-seeding when a component runs out)
std::vector<Index> sample_nodes(const Graph& g, const SamplerConfig& cfg);

/// sample_nodes followed by induced_subgraph.
Subgraph sample_subgraph(const Graph& g, const SamplerConfig& cfg, std::string parent_id = "G");

/// Inclusion probability of every node under `cfg`: exact for node_uniform
/// (target/n); otherwise the empirical frequency over `trials` independent draws.
std::vector<double> inclusion_probabilities(const Graph& g, const SamplerConfig& cfg, std::size_t trials = 2000);

struct AggregationReport {
  double mean_relative_error = 0.0;
  double max_relative_error = 0.0;
  std::size_t trials = 0;
  std::vector<double> per_node_error;
};

/// Monte-Carlo check of the importance-weighted aggregation estimator
///   ζ_v = Σ_{u ∈ V_s} Ã(u,v) / π_u · Wᵀh_u
/// against Σ_{u ∈ V} Ã(u,v) Wᵀh_u, with H rows as h_u. Per-node error is the
/// relative Euclidean distance of the trial mean. Throws DataError if a node that
/// contributes to some aggregation has π_u = 0.
AggregationReport check_unbiased_aggregation(const Graph& g, const SamplerConfig& cfg, std::size_t trials,
                                             const Matrix& weight, const Matrix& h);

/// Adds up to M not-yet-present parent neighbours per current node (uniform, without
/// replacement per node). Existing nodes keep their local indices; new nodes are appended.
Subgraph expand_subgraph(const Graph& parent, const Subgraph& sg, Index per_node, std::uint64_t seed);

}  // namespace sagnas
