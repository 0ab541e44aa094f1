#include "sagnas/expansion.hpp"

#include "sagnas/rng.hpp"
#include "sagnas/sampler.hpp"

#include <stdexcept>

namespace sagnas {

int select_split_node(const CellTopology& topology, const AlphaTable& alphas) {
  if (topology.intermediate_count() < 1) throw std::invalid_argument("select_split_node: no intermediate node");
  int best = 2;
  double best_h = node_entropy(topology, alphas, 2);
  for (int j = 3; j < topology.node_count(); ++j) {
    const double h = node_entropy(topology, alphas, j);
    if (h > best_h) {
      best = j;
      best_h = h;
    }
  }
  return best;
}

double unstable_group_entropy(const CellTopology& topology, const AlphaTable& alphas, std::span<const int> group) {
  if (group.empty()) throw std::invalid_argument("unstable_group_entropy: empty group");
  double s = 0.0;
  for (int j : group) {
    if (!topology.is_intermediate(j))
      throw std::invalid_argument("unstable_group_entropy: node " + std::to_string(j) + " is not intermediate");
    s += node_entropy(topology, alphas, j);
  }
  return s;
}

SplitRecord expand_iteration(ExpansionState& state, const Graph& parent, const ExpansionConfig& cfg) {
  const auto iter = static_cast<std::uint64_t>(state.iteration);
  const CellTopology& topo = state.model.topology();
  const AlphaTable& alphas = state.model.alphas();

  SplitRecord rec;
  rec.iteration = state.iteration;
  rec.random_choice = cfg.random_split;
  if (cfg.random_split) {
    Rng rng(derive_seed(cfg.seed, "expand.random_node", {iter}));
    rec.split_node = 2 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(topo.intermediate_count())));
  } else {
    rec.split_node = select_split_node(topo, alphas);
  }
  const int n_before = topo.intermediate_count();
  const int before_group[] = {rec.split_node};
  rec.group_entropy_before = unstable_group_entropy(topo, alphas, before_group);
  rec.overall_entropy_before = overall_entropy(topo, alphas);
  double stable = 0.0;
  for (int j = 2; j < topo.node_count(); ++j)
    if (j != rec.split_node) stable += node_entropy(topo, alphas, j);
  rec.architecture_entropy_before = rec.overall_entropy_before;
  rec.subgraph_nodes_before = state.subgraph.node_map.size();

  SupernetModel next = state.model.split(rec.split_node, derive_seed(cfg.seed, "expand.split", {iter}));
  const SplitResult shape = split_node(topo, rec.split_node);
  rec.node_j0 = shape.j0;
  rec.node_j1 = shape.j1;

  Subgraph grown = expand_subgraph(parent, state.subgraph, cfg.neighbors, derive_seed(cfg.seed, "expand.neighbors", {iter}));

  SearchConfig search = cfg.search;
  search.seed = derive_seed(cfg.seed, "expand.search", {iter});
  localized_search(next, shape.fresh_edges, grown.graph, search);

  const int after_group[] = {shape.j0, shape.j1};
  rec.group_entropy_after = unstable_group_entropy(next.topology(), next.alphas(), after_group);
  rec.overall_entropy_after = overall_entropy(next.topology(), next.alphas());
  rec.architecture_entropy_after = (stable + rec.group_entropy_after) / (n_before + 1);
  rec.subgraph_nodes_after = grown.node_map.size();

  next.topology().add_split_record(rec);
  state.model = std::move(next);
  state.subgraph = std::move(grown);
  ++state.iteration;
  return rec;
}

ExpansionResult run_expansion(ExpansionState initial, const Graph& parent, const ExpansionConfig& cfg) {
  if (cfg.iterations < 0) throw std::invalid_argument("run_expansion: negative iteration count");
  ExpansionResult out{std::move(initial), {}, {}, 0.0};
  out.seed_overall_entropy = overall_entropy(out.state.model.topology(), out.state.model.alphas());
  for (int i = 0; i < cfg.iterations; ++i) out.history.push_back(expand_iteration(out.state, parent, cfg));
  out.architecture = discretize(out.state.model);
  return out;
}

}  // namespace sagnas
