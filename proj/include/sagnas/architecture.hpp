#pragma once

#include "sagnas/graph.hpp"
#include "sagnas/ops.hpp"
#include "sagnas/topology.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sagnas {

/// How an intermediate node turns the sum of its input edges into its output.
///   layer: per-row standardization without affine parameters
///   none:  the plain sum
enum class NodeNorm { layer, none };

std::string_view node_norm_name(NodeNorm norm);
/// Throws ConfigError for unknown names.
NodeNorm parse_node_norm(std::string_view name);

/// A discretized cell: one operation per edge (zero marks a pruned edge),
/// plus the stacking depth, hidden width and node normalization it is meant to run with.
struct DerivedArchitecture {
  CellTopology topology;
  std::vector<OpKind> ops;  // aligned with topology.edges()
  int cells = 1;
  Index hidden = 64;
  NodeNorm node_norm = NodeNorm::layer;

  bool pruned(std::size_t edge) const { return ops.at(edge) == OpKind::zero; }
  friend bool operator==(const DerivedArchitecture&, const DerivedArchitecture&) = default;
};

// Text interchange format:
//
//   # sagnas derived architecture
//   schema_version: 1
//   cells: 5
//   hidden: 64
//   node_norm: layer        (optional, defaults to layer)
//   intermediate_nodes: 3
//   edges:
//     (0 -> 2): gcn
//     ...
//   splits:
//     iteration=0 node=3 j0=3 j1=4 random=0 group_before=... (one line per split)
std::string format_architecture(const DerivedArchitecture& arch);
/// Throws DataError with the offending line on malformed input.
DerivedArchitecture parse_architecture(std::string_view text);

void save_architecture(const DerivedArchitecture& arch, const std::filesystem::path& path);
DerivedArchitecture load_architecture(const std::filesystem::path& path);

}  // namespace sagnas
