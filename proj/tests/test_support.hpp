#pragma once

#include "sagnas/graph.hpp"
#include "sagnas/rng.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sagnas::testing {

inline Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = scale * standard_normal(rng);
  return m;
}

/// Erdős–Rényi graph with random features, labels in [0, classes) and a 60/20/20 split.
inline Graph random_graph(Index n, double p, Index feat_dim, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<Index, Index>> edges;
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v)
      if (uniform01(rng) < p) edges.emplace_back(u, v);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(classes)));
  return Graph::from_edges(n, edges, random_matrix(n, feat_dim, rng), std::move(labels),
                           random_split(n, 0.6, 0.2, seed + 1), classes);
}

inline Matrix dense_adjacency(const Graph& g) {
  Matrix a = Matrix::Zero(g.num_nodes(), g.num_nodes());
  for (Index v = 0; v < g.num_nodes(); ++v)
    for (Index u : g.neighbors(v)) a(v, u) = 1.0;
  return a;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sagnas_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sagnas::testing
