#include "sagnas/sampler.hpp"

#include "sagnas/errors.hpp"
#include "sagnas/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>
#include <unordered_set>

namespace sagnas {

std::string_view sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::node_uniform: return "node_uniform";
    case SamplerKind::node_degree: return "node_degree";
    case SamplerKind::cluster: return "cluster";
  }
  return "?";
}

SamplerKind parse_sampler(std::string_view name) {
  for (auto k : {SamplerKind::node_uniform, SamplerKind::node_degree, SamplerKind::cluster})
    if (sampler_name(k) == name) return k;
  throw ConfigError("unknown sampler kind '" + std::string(name) + "'");
}

namespace {

std::vector<Index> uniform_nodes(Index n, Index k, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = 0; i < k; ++i) std::swap(perm[i], perm[i + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n - i)))]);
  perm.resize(static_cast<std::size_t>(k));
  return perm;
}

// Successive sampling ∝ weight via exponential keys: key = E / w, smallest k keys win.
std::vector<Index> degree_nodes(const Graph& g, Index k, Rng& rng) {
  const Index n = g.num_nodes();
  std::vector<std::pair<double, Index>> keys(static_cast<std::size_t>(n));
  for (Index v = 0; v < n; ++v) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    keys[v] = {-std::log(u) / static_cast<double>(g.degree(v) + 1), v};
  }
  std::partial_sort(keys.begin(), keys.begin() + k, keys.end());
  std::vector<Index> out;
  for (Index i = 0; i < k; ++i) out.push_back(keys[i].second);
  return out;
}

std::vector<Index> cluster_nodes(const Graph& g, Index k, Rng& rng) {
  const Index n = g.num_nodes();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<Index> out;
  while (static_cast<Index>(out.size()) < k) {
    // Random unvisited root.
    Index root;
    do {
      root = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    } while (seen[root]);
    std::queue<Index> q;
    q.push(root);
    seen[root] = 1;
    while (!q.empty() && static_cast<Index>(out.size()) < k) {
      const Index v = q.front();
      q.pop();
      out.push_back(v);
      for (Index u : g.neighbors(v)) {
        if (!seen[u]) {
          seen[u] = 1;
          q.push(u);
        }
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Index> sample_nodes(const Graph& g, const SamplerConfig& cfg) {
  if (cfg.target_size <= 0) throw ConfigError("sampler target size must be positive");
  if (cfg.target_size > g.num_nodes()) throw ConfigError("sampler target size exceeds graph size");
  Rng rng(cfg.seed);
  std::vector<Index> nodes;
  switch (cfg.kind) {
    case SamplerKind::node_uniform: nodes = uniform_nodes(g.num_nodes(), cfg.target_size, rng); break;
    case SamplerKind::node_degree: nodes = degree_nodes(g, cfg.target_size, rng); break;
    case SamplerKind::cluster: nodes = cluster_nodes(g, cfg.target_size, rng); break;
  }
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

Subgraph sample_subgraph(const Graph& g, const SamplerConfig& cfg, std::string parent_id) {
  const auto nodes = sample_nodes(g, cfg);
  return induced_subgraph(g, nodes, std::move(parent_id), derive_seed(cfg.seed, "subgraph.split"));
}

std::vector<double> inclusion_probabilities(const Graph& g, const SamplerConfig& cfg, std::size_t trials) {
  const Index n = g.num_nodes();
  if (cfg.kind == SamplerKind::node_uniform)
    return std::vector<double>(static_cast<std::size_t>(n), static_cast<double>(cfg.target_size) / static_cast<double>(n));
  std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
  for (std::size_t t = 0; t < trials; ++t) {
    SamplerConfig c = cfg;
    c.seed = derive_seed(cfg.seed, "inclusion.estimate", {t});
    for (Index v : sample_nodes(g, c)) counts[v] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(trials);
  return counts;
}

AggregationReport check_unbiased_aggregation(const Graph& g, const SamplerConfig& cfg, std::size_t trials,
                                             const Matrix& weight, const Matrix& h) {
  const Index n = g.num_nodes();
  if (h.rows() != n || weight.rows() != h.cols()) throw std::invalid_argument("check_unbiased_aggregation: shape mismatch");
  if (trials == 0) throw std::invalid_argument("check_unbiased_aggregation: needs at least one trial");
  const SparseMatrix a = normalize_adjacency(g);
  const Matrix msg = h * weight;  // row u is (Wᵀ h_u)ᵀ
  const Matrix full = a.transpose() * msg;
  const auto pi = inclusion_probabilities(g, cfg, trials);
  for (Index u = 0; u < n; ++u)
    if (pi[u] <= 0.0) throw DataError("inclusion probability of node " + std::to_string(u) + " is zero");

  Matrix mean = Matrix::Zero(n, msg.cols());
  std::vector<char> in(static_cast<std::size_t>(n));
  for (std::size_t t = 0; t < trials; ++t) {
    SamplerConfig c = cfg;
    c.seed = derive_seed(cfg.seed, "aggregation.trial", {t});
    std::fill(in.begin(), in.end(), 0);
    for (Index u : sample_nodes(g, c)) in[u] = 1;
    for (Index u = 0; u < n; ++u) {
      if (!in[u]) continue;
      for (SparseMatrix::InnerIterator it(a, u); it; ++it) mean.row(it.col()) += (it.value() / pi[u]) * msg.row(u);
    }
  }
  mean /= static_cast<double>(trials);

  AggregationReport report;
  report.trials = trials;
  for (Index v = 0; v < n; ++v) {
    const double ref = full.row(v).norm();
    const double err = (mean.row(v) - full.row(v)).norm() / std::max(ref, 1e-300);
    report.per_node_error.push_back(err);
    report.max_relative_error = std::max(report.max_relative_error, err);
    report.mean_relative_error += err;
  }
  report.mean_relative_error /= static_cast<double>(n);
  return report;
}

Subgraph expand_subgraph(const Graph& parent, const Subgraph& sg, Index per_node, std::uint64_t seed) {
  if (per_node < 0) throw std::invalid_argument("expand_subgraph: M must be non-negative");
  std::vector<Index> nodes = sg.node_map;
  std::unordered_set<Index> present(nodes.begin(), nodes.end());
  Rng rng(seed);
  const std::size_t original = nodes.size();
  for (std::size_t i = 0; i < original; ++i) {
    std::vector<Index> candidates;
    for (Index u : parent.neighbors(sg.node_map[i]))
      if (!present.count(u)) candidates.push_back(u);
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(per_node), candidates.size());
    for (std::size_t k = 0; k < take; ++k) {
      std::swap(candidates[k], candidates[k + uniform_index(rng, candidates.size() - k)]);
      present.insert(candidates[k]);
      nodes.push_back(candidates[k]);
    }
  }
  if (nodes.size() == original) return sg;
  Subgraph out = induced_subgraph(parent, nodes, sg.parent_id, derive_seed(seed, "expand.split"));
  return out;
}

}  // namespace sagnas
