#pragma once

#include "sagnas/expansion.hpp"
#include "sagnas/graph.hpp"
#include "sagnas/sampler.hpp"
#include "sagnas/seedselect.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sagnas {

struct DatasetConfig {
  std::string source = "sbm";  // sbm | files
  SbmParams sbm;
  std::string edges;
  std::string features;
  std::string labels;
  std::string split;  // mask file; empty means a random split from train_ratio/val_ratio
  double train_ratio = 0.6;
  double val_ratio = 0.2;
};

struct RunConfig {
  DatasetConfig dataset;
  SamplerKind sampler = SamplerKind::node_degree;
  double subgraph_fraction = 0.2;
  int subgraphs = 9;  // K
  int cells = 5;      // L
  int intermediate = 3;
  Index hidden = 64;
  NodeNorm node_norm = NodeNorm::layer;
  std::vector<OpKind> ops{kOpRegistry.begin(), kOpRegistry.end()};
  SearchConfig search;
  int expansion_iterations = 3;
  int expansion_epochs = 40;
  Index expansion_neighbors = 2;
  bool expansion_random_split = false;
  SelectionStrategy strategy = SelectionStrategy::rank_consistency;
  int workers = 1;
  std::uint64_t master_seed = 0;

  /// Throws ConfigError on out-of-range or inconsistent values.
  void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys and malformed
/// values throw ConfigError naming origin:line.
RunConfig parse_config(std::string_view text, std::string_view origin = "<config>");

/// Reads the file, parses it, applies SAGNAS_SEED / SAGNAS_WORKERS and validates.
RunConfig load_config(const std::filesystem::path& path);

void apply_env_overrides(RunConfig& cfg);

/// Every key with its resolved value, in declaration order (parse_config accepts the output).
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);
std::string format_config(const RunConfig& cfg);

}  // namespace sagnas
