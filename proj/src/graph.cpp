#include "sagnas/graph.hpp"

#include "sagnas/errors.hpp"
#include "sagnas/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace sagnas {

Graph::Graph(std::vector<Index> row_offsets, std::vector<Index> col_indices, Matrix features,
             std::vector<int> labels, std::vector<NodeSplit> split, int num_classes)
    : row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      split_(std::move(split)),
      num_classes_(num_classes) {
  const Index n = static_cast<Index>(labels_.size());
  if (static_cast<Index>(row_offsets_.size()) != n + 1) throw DataError("row offsets length must be n+1");
  if (row_offsets_.front() != 0 || row_offsets_.back() != static_cast<Index>(col_indices_.size()))
    throw DataError("row offsets do not span the column array");
  if (features_.rows() != n) {
    throw DataError("feature row count " + std::to_string(features_.rows()) + " does not match " +
                    std::to_string(n) + " nodes");
  }
  if (static_cast<Index>(split_.size()) != n) throw DataError("split vector length does not match node count");
  for (Index v = 0; v < n; ++v) {
    if (row_offsets_[v + 1] < row_offsets_[v]) throw DataError("row offsets not monotone");
    for (Index k = row_offsets_[v]; k < row_offsets_[v + 1]; ++k) {
      const Index u = col_indices_[k];
      if (u < 0 || u >= n) throw DataError("column index out of range at row " + std::to_string(v));
      if (u == v) throw DataError("self loop stored at node " + std::to_string(v));
      if (k > row_offsets_[v] && col_indices_[k - 1] >= u)
        throw DataError("columns not strictly sorted at row " + std::to_string(v));
    }
  }
  for (Index v = 0; v < n; ++v)
    for (Index u : neighbors(v))
      if (!has_edge(u, v)) throw DataError("adjacency not symmetric");
  if (num_classes_ <= 0 && n > 0) throw DataError("graph needs at least one class");
  for (Index v = 0; v < n; ++v) {
    if (labels_[v] < 0 || labels_[v] >= num_classes_) {
      if (split_[v] != NodeSplit::none)
        throw DataError("masked node " + std::to_string(v) + " has invalid label");
      throw DataError("label out of range at node " + std::to_string(v));
    }
  }
}

Graph Graph::from_edges(Index num_nodes, std::span<const std::pair<Index, Index>> edges, Matrix features,
                        std::vector<int> labels, std::vector<NodeSplit> split, int num_classes) {
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(num_nodes));
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw DataError("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range");
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<Index> offsets{0};
  std::vector<Index> cols;
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    offsets.push_back(static_cast<Index>(cols.size()));
  }
  if (num_classes < 0) {
    num_classes = labels.empty() ? 1 : *std::max_element(labels.begin(), labels.end()) + 1;
  }
  return Graph(std::move(offsets), std::move(cols), std::move(features), std::move(labels), std::move(split),
               num_classes);
}

bool Graph::has_edge(Index u, Index v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Index> Graph::nodes_in(NodeSplit which) const {
  std::vector<Index> out;
  for (Index v = 0; v < num_nodes(); ++v)
    if (split_[v] == which) out.push_back(v);
  return out;
}

bool operator==(const Graph& a, const Graph& b) {
  return a.row_offsets_ == b.row_offsets_ && a.col_indices_ == b.col_indices_ && a.labels_ == b.labels_ &&
         a.split_ == b.split_ && a.num_classes_ == b.num_classes_ && a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() && a.features_ == b.features_;
}

SparseOperator SparseOperator::from(SparseMatrix m) {
  SparseOperator op;
  op.transpose = SparseMatrix(m.transpose());
  op.forward = std::move(m);
  op.forward.makeCompressed();
  op.transpose.makeCompressed();
  return op;
}

SparseMatrix normalize_adjacency(const Graph& g) {
  const Index n = g.num_nodes();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(2 * g.num_edges() + n));
  for (Index v = 0; v < n; ++v) {
    const double dv = static_cast<double>(g.degree(v) + 1);
    trips.emplace_back(v, v, 1.0 / dv);
    for (Index u : g.neighbors(v)) {
      const double du = static_cast<double>(g.degree(u) + 1);
      // du*dv is commutative, so (u,v) and (v,u) are bitwise equal.
      trips.emplace_back(v, u, 1.0 / std::sqrt(du * dv));
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

GraphOperators GraphOperators::build(const Graph& g) {
  const Index n = g.num_nodes();
  std::vector<Eigen::Triplet<double>> adj, mean;
  for (Index v = 0; v < n; ++v) {
    const double inv = g.degree(v) > 0 ? 1.0 / static_cast<double>(g.degree(v)) : 0.0;
    for (Index u : g.neighbors(v)) {
      adj.emplace_back(v, u, 1.0);
      mean.emplace_back(v, u, inv);
    }
  }
  SparseMatrix a(n, n), m(n, n);
  a.setFromTriplets(adj.begin(), adj.end());
  m.setFromTriplets(mean.begin(), mean.end());
  GraphOperators ops;
  ops.normalized = SparseOperator::from(normalize_adjacency(g));
  ops.adjacency = SparseOperator::from(std::move(a));
  ops.mean = SparseOperator::from(std::move(m));
  return ops;
}

std::vector<NodeSplit> random_split(Index n, double train_fraction, double val_fraction, std::uint64_t seed) {
  if (train_fraction < 0 || val_fraction < 0 || train_fraction + val_fraction > 1.0 + 1e-12)
    throw ConfigError("split fractions must be non-negative and sum to at most 1");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  for (Index i = n - 1; i > 0; --i) std::swap(perm[i], perm[uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
  const auto n_train = static_cast<Index>(std::llround(train_fraction * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<Index>(std::llround(val_fraction * static_cast<double>(n))));
  std::vector<NodeSplit> split(static_cast<std::size_t>(n), NodeSplit::test);
  for (Index i = 0; i < n_train; ++i) split[perm[i]] = NodeSplit::train;
  for (Index i = n_train; i < n_train + n_val; ++i) split[perm[i]] = NodeSplit::val;
  return split;
}

Graph generate_sbm(const SbmParams& p) {
  if (p.block_sizes.empty()) throw ConfigError("SBM needs at least one block");
  if (p.p_in < 0 || p.p_in > 1 || p.p_out < 0 || p.p_out > 1) throw ConfigError("SBM probabilities must lie in [0,1]");
  if (p.feat_dim <= 0) throw ConfigError("SBM feature dimension must be positive");
  const Index n = std::accumulate(p.block_sizes.begin(), p.block_sizes.end(), Index{0});
  if (n <= 0) throw ConfigError("SBM has zero total nodes");

  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (std::size_t b = 0; b < p.block_sizes.size(); ++b)
    labels.insert(labels.end(), static_cast<std::size_t>(p.block_sizes[b]), static_cast<int>(b));

  Rng rng(derive_seed(p.seed, "sbm.edges"));
  std::vector<std::pair<Index, Index>> edges;
  for (Index u = 0; u < n; ++u) {
    for (Index v = u + 1; v < n; ++v) {
      const double prob = labels[u] == labels[v] ? p.p_in : p.p_out;
      if (uniform01(rng) < prob) edges.emplace_back(u, v);
    }
  }

  Rng frng(derive_seed(p.seed, "sbm.features"));
  Matrix x(n, p.feat_dim);
  for (Index v = 0; v < n; ++v)
    for (Index c = 0; c < p.feat_dim; ++c) x(v, c) = p.noise * standard_normal(frng);
  for (Index v = 0; v < n; ++v) x(v, labels[v] % p.feat_dim) += 1.0;

  auto split = random_split(n, p.train_fraction, p.val_fraction, derive_seed(p.seed, "sbm.split"));
  return Graph::from_edges(n, edges, std::move(x), std::move(labels), std::move(split),
                           static_cast<int>(p.block_sizes.size()));
}

Subgraph induced_subgraph(const Graph& g, std::span<const Index> nodes, std::string parent_id,
                          std::uint64_t split_seed) {
  if (nodes.empty()) throw DataError("induced subgraph requires a nonempty node set");
  const Index n = g.num_nodes();
  std::unordered_map<Index, Index> local;
  local.reserve(nodes.size() * 2);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Index v = nodes[i];
    if (v < 0 || v >= n) throw DataError("subgraph node " + std::to_string(v) + " out of range");
    if (!local.emplace(v, static_cast<Index>(i)).second)
      throw DataError("duplicate node " + std::to_string(v) + " in subgraph node set");
  }
  const auto m = static_cast<Index>(nodes.size());
  std::vector<Index> offsets{0};
  std::vector<Index> cols;
  Matrix x(m, g.feature_dim());
  std::vector<int> labels(static_cast<std::size_t>(m));
  std::vector<NodeSplit> split(static_cast<std::size_t>(m));
  Rng rng(split_seed);
  for (Index i = 0; i < m; ++i) {
    const Index v = nodes[i];
    std::vector<Index> row;
    for (Index u : g.neighbors(v))
      if (auto it = local.find(u); it != local.end()) row.push_back(it->second);
    std::sort(row.begin(), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    offsets.push_back(static_cast<Index>(cols.size()));
    x.row(i) = g.features().row(v);
    labels[i] = g.labels()[v];
    split[i] = g.split()[v];
    if (split[i] == NodeSplit::none) split[i] = uniform01(rng) < 0.6 ? NodeSplit::train : NodeSplit::val;
  }
  Subgraph sg{Graph(std::move(offsets), std::move(cols), std::move(x), std::move(labels), std::move(split),
                    g.num_classes()),
              std::vector<Index>(nodes.begin(), nodes.end()), std::move(parent_id)};
  return sg;
}

}  // namespace sagnas
