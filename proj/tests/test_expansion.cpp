#include "sagnas/expansion.hpp"
#include "sagnas/sampler.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace sagnas;
using namespace sagnas::testing;

namespace {

struct Fixture {
  Graph graph;
  ExpansionState state;
  ExpansionConfig cfg;
};

Fixture make_fixture(std::uint64_t seed, int intermediate = 3) {
  SbmParams p;
  p.block_sizes = {60, 60, 60};
  p.p_in = 0.1;
  p.p_out = 0.01;
  p.feat_dim = 6;
  p.seed = seed;
  Graph g = generate_sbm(p);
  Subgraph sg = sample_subgraph(g, {SamplerKind::node_degree, 36, seed});
  SearchConfig sc;
  sc.epochs_search = 6;
  sc.lr_alpha = 0.05;
  sc.seed = seed;
  SearchResult r = darts_search(sg.graph, CellTopology::dense(intermediate), OpSpace(), 8, 1, sc);
  ExpansionConfig cfg;
  cfg.iterations = 3;
  cfg.neighbors = 1;
  cfg.search = sc;
  cfg.seed = seed;
  return Fixture{std::move(g), ExpansionState{std::move(r.model), std::move(sg), 0}, cfg};
}

AlphaTable uniform_table(std::size_t edges, std::size_t ops = 9) {
  AlphaTable t;
  for (std::size_t e = 0; e < edges; ++e)
    t.edges.push_back({Parameter("alpha", Matrix::Zero(1, static_cast<Index>(ops))), std::nullopt});
  return t;
}

}  // namespace

TEST_CASE("split node choice: single node, uniform among one-hot, max scan") {
  CellTopology one(std::vector<std::vector<int>>{{0, 1}});
  CHECK(select_split_node(one, uniform_table(2)) == 2);

  CellTopology topo = CellTopology::dense(4);
  AlphaTable t = uniform_table(topo.edge_count());
  for (std::size_t e = 0; e < t.edges.size(); ++e) t.edges[e].frozen = 0;
  for (int e : topo.input_edges(4)) t.edges[static_cast<std::size_t>(e)].frozen.reset();
  CHECK(select_split_node(topo, t) == 4);

  for (auto& a : t.edges) a.frozen.reset();
  CHECK(select_split_node(topo, t) == 2);  // all uniform: lowest index

  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    for (auto& a : t.edges) a.logits.value = random_matrix(1, 9, rng, 2.0);
    int best = 2;
    double best_h = -1.0;
    for (int j = 2; j < topo.node_count(); ++j) {
      double s = 0.0;
      for (int e : topo.input_edges(j)) s += edge_entropy(t.edges[static_cast<std::size_t>(e)].logits.value);
      s /= static_cast<double>(topo.input_edges(j).size());
      if (s > best_h) {
        best_h = s;
        best = j;
      }
    }
    CHECK(select_split_node(topo, t) == best);
  }
}

TEST_CASE("unstable group entropy is a sum of node entropies") {
  CellTopology topo = CellTopology::dense(3);
  AlphaTable t = uniform_table(topo.edge_count());
  const int single[] = {3};
  CHECK(std::abs(unstable_group_entropy(topo, t, single) - std::log(9.0)) < 1e-12);
  for (auto& a : t.edges) a.frozen = 2;
  CHECK(unstable_group_entropy(topo, t, single) == 0.0);

  Rng rng(2);
  for (auto& a : t.edges) {
    a.frozen.reset();
    a.logits.value = random_matrix(1, 9, rng);
  }
  SplitResult r = split_node(topo, 3);
  AlphaTable after;
  for (std::size_t e = 0; e < r.edge_origin.size(); ++e)
    after.edges.push_back(r.edge_origin[e] >= 0 ? t.edges[static_cast<std::size_t>(r.edge_origin[e])]
                                                : EdgeAlpha{Parameter("alpha", random_matrix(1, 9, rng)), std::nullopt});
  auto mean_entropy = [&](const CellTopology& tp, const AlphaTable& al, int j) {
    double s = 0.0;
    for (int e : tp.input_edges(j)) s += edge_entropy(al.edges[static_cast<std::size_t>(e)].logits.value);
    return s / static_cast<double>(tp.input_edges(j).size());
  };
  const int pair[] = {r.j0, r.j1};
  CHECK(std::abs(unstable_group_entropy(topo, t, single) - mean_entropy(topo, t, 3)) < 1e-12);
  CHECK(std::abs(unstable_group_entropy(r.topology, after, pair) -
                 (mean_entropy(r.topology, after, r.j0) + mean_entropy(r.topology, after, r.j1))) < 1e-12);

  CHECK_THROWS_AS(unstable_group_entropy(topo, t, std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(unstable_group_entropy(topo, t, std::vector<int>{1}), std::invalid_argument);
}

TEST_CASE("zero iterations leave the state unchanged") {
  Fixture f = make_fixture(3);
  f.cfg.iterations = 0;
  const auto topo = f.state.model.topology();
  const auto nodes = f.state.subgraph.node_map;
  ExpansionResult r = run_expansion(f.state, f.graph, f.cfg);
  CHECK(r.history.empty());
  CHECK(r.state.model.topology() == topo);
  CHECK(r.state.subgraph.node_map == nodes);
  CHECK(r.architecture == discretize(f.state.model));
}

TEST_CASE("one iteration grows the cell by one node and never shrinks the subgraph") {
  Fixture f = make_fixture(4);
  const auto before_nodes = f.state.subgraph.node_map;
  SplitRecord rec = expand_iteration(f.state, f.graph, f.cfg);
  CHECK(f.state.model.topology().intermediate_count() == 4);
  CHECK(f.state.iteration == 1);
  CHECK(rec.subgraph_nodes_after >= rec.subgraph_nodes_before);
  CHECK(rec.subgraph_nodes_before == before_nodes.size());
  CHECK(rec.node_j0 == rec.split_node);
  CHECK(rec.node_j1 == rec.split_node + 1);
  CHECK(f.state.model.topology().split_history().size() == 1);
  CHECK(f.state.model.topology().split_history().back() == rec);
  const int pair[] = {rec.node_j0, rec.node_j1};
  CHECK(rec.group_entropy_after == unstable_group_entropy(f.state.model.topology(), f.state.model.alphas(), pair));
  CHECK(rec.overall_entropy_after == overall_entropy(f.state.model.topology(), f.state.model.alphas()));
  CHECK(rec.group_entropy_after <= 2.0 * std::log(9.0));
}

TEST_CASE("full expansion: structure, frozen alpha, subgraph growth, determinism") {
  Fixture f = make_fixture(5);
  ExpansionResult r = run_expansion(f.state, f.graph, f.cfg);
  REQUIRE(r.history.size() == 3);
  CHECK(r.state.model.topology().intermediate_count() == 6);
  CHECK(r.architecture.topology.intermediate_count() == 6);
  CHECK(r.architecture.topology.split_history().size() == 3);
  CHECK(r.seed_overall_entropy == overall_entropy(f.state.model.topology(), f.state.model.alphas()));

  std::set<Index> previous(f.state.subgraph.node_map.begin(), f.state.subgraph.node_map.end());
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    CHECK(r.history[i].iteration == static_cast<int>(i));
    if (i > 0) CHECK(r.history[i].subgraph_nodes_before == r.history[i - 1].subgraph_nodes_after);
  }
  for (Index v : r.state.subgraph.node_map) CHECK((v >= 0 && v < f.graph.num_nodes()));
  for (Index v : previous) CHECK(std::count(r.state.subgraph.node_map.begin(), r.state.subgraph.node_map.end(), v) == 1);

  // Replaying the iterations one by one: each frozen edge keeps its logits to the bit.
  ExpansionState s = f.state;
  for (int i = 0; i < 3; ++i) {
    SupernetModel before = s.model;
    SplitResult shape = split_node(before.topology(), select_split_node(before.topology(), before.alphas()));
    expand_iteration(s, f.graph, f.cfg);
    for (std::size_t e = 0; e < shape.edge_origin.size(); ++e) {
      if (shape.edge_origin[e] < 0) continue;
      const auto& old = before.alphas().edges[static_cast<std::size_t>(shape.edge_origin[e])];
      CHECK(s.model.alphas().edges[e].logits.value == old.logits.value);
      if (old.frozen) CHECK(s.model.alphas().edges[e].frozen == old.frozen);
    }
  }
  CHECK(s.model.topology() == r.state.model.topology());

  ExpansionResult again = run_expansion(f.state, f.graph, f.cfg);
  CHECK(again.architecture == r.architecture);
  CHECK(again.history == r.history);
}

TEST_CASE("random split ablation is reproducible and flagged") {
  Fixture f = make_fixture(6);
  f.cfg.random_split = true;
  f.cfg.iterations = 2;
  ExpansionResult a = run_expansion(f.state, f.graph, f.cfg);
  ExpansionResult b = run_expansion(f.state, f.graph, f.cfg);
  CHECK(a.history == b.history);
  for (const auto& rec : a.history) CHECK(rec.random_choice);
  CHECK(a.state.model.topology().intermediate_count() == 5);
}
