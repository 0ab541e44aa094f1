#pragma once

#include "sagnas/graph.hpp"

#include <filesystem>
#include <variant>

namespace sagnas {

/// Random split drawn from fractions; remaining nodes become test.
struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  std::uint64_t seed = 0;
};

/// One token per node line: train | val | test | none.
struct SplitMaskFile {
  std::filesystem::path path;
};

using SplitSpec = std::variant<SplitRatios, SplitMaskFile>;

// Text formats
//   edges:    one "u v" pair per line; '#' starts a comment; directed pairs are symmetrized
//   features: header "n feat_dim", then n whitespace-separated rows
//   labels:   one integer per line
Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                 const std::filesystem::path& label_path, const SplitSpec& split);

/// Writes edges.txt, features.txt, labels.txt and split.txt into `dir`.
void save_graph_text(const Graph& g, const std::filesystem::path& dir);
Graph load_graph_text(const std::filesystem::path& dir);

std::string encode_graph(const Graph& g);
Graph decode_graph(std::string_view bytes);

void save_snapshot(const Graph& g, const std::filesystem::path& path);
Graph load_snapshot(const std::filesystem::path& path);

}  // namespace sagnas
