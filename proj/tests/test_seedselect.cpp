#include "sagnas/errors.hpp"
#include "sagnas/kendall.hpp"
#include "sagnas/sampler.hpp"
#include "sagnas/seedselect.hpp"
#include "kendall_oracle.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace sagnas;
using namespace sagnas::testing;

namespace {

std::vector<double> random_sequence(Rng& rng, std::size_t k, bool coarse) {
  std::vector<double> v(k);
  for (auto& x : v) x = coarse ? static_cast<double>(uniform_index(rng, 4)) / 4.0 : uniform01(rng);
  return v;
}

PerfGrid grid_from(const std::vector<std::vector<double>>& subs, const std::vector<double>& full) {
  PerfGrid g;
  for (std::size_t i = 0; i < subs.size(); ++i) g.subgraphs.push_back({"G/" + std::to_string(i), subs[i]});
  g.full = {"G", full};
  return g;
}

std::vector<DerivedArchitecture> dummy_archs(std::size_t k) {
  std::vector<DerivedArchitecture> archs(k);
  for (std::size_t i = 0; i < k; ++i) {
    archs[i].topology = CellTopology(std::vector<std::vector<int>>{{0}});
    archs[i].ops = {kOpRegistry[i % 8]};
    archs[i].hidden = 4;
  }
  return archs;
}

}  // namespace

TEST_CASE("kendall: identical, mirrored, all ties") {
  const std::vector<double> up{0.1, 0.5, 0.9}, down{0.9, 0.5, 0.1};
  CHECK(weighted_kendall_tau(up, up) == 1.0);
  CHECK(weighted_kendall_tau(down, up) == -1.0);
  const std::vector<double> flat{0.3, 0.3, 0.3};
  CHECK(weighted_kendall_tau(flat, flat) == 1.0);
  CHECK(weighted_kendall_tau(flat, up) == 0.0);
  CHECK_THROWS_AS(weighted_kendall_tau(std::vector<double>{0.1}, std::vector<double>{0.2}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_kendall_tau(up, std::vector<double>{0.1, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_kendall_tau(std::vector<double>{0.1, NAN}, std::vector<double>{0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("kendall matches the pair-loop oracle on random sequences") {
  Rng rng(42);
  for (int t = 0; t < 1000; ++t) {
    const auto k = static_cast<std::size_t>(2 + uniform_index(rng, 11));
    const bool coarse = t % 3 == 0;
    auto a = random_sequence(rng, k, coarse), b = random_sequence(rng, k, coarse);
    const double tau = weighted_kendall_tau(a, b);
    CHECK(std::abs(tau - kendall_oracle(a, b)) < 1e-12);
    CHECK((tau >= -1.0 && tau <= 1.0));
  }
}

TEST_CASE("kendall properties: permutation, shift, concordance") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    auto a = random_sequence(rng, 8, false), b = random_sequence(rng, 8, false);
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pa(8), pb(8), sa(8), sb(8);
    for (std::size_t i = 0; i < 8; ++i) {
      pa[i] = a[perm[i]];
      pb[i] = b[perm[i]];
      sa[i] = a[i] + 0.25;
      sb[i] = b[i] + 0.25;
    }
    CHECK(std::abs(weighted_kendall_tau(pa, pb) - weighted_kendall_tau(a, b)) < 1e-12);
    CHECK(std::abs(weighted_kendall_tau(sa, sb) - weighted_kendall_tau(a, b)) < 1e-9);
    CHECK(weighted_kendall_tau(a, a) == 1.0);

    std::vector<double> mono(8);
    std::sort(a.begin(), a.end());
    for (std::size_t i = 0; i < 8; ++i) mono[i] = 0.5 * a[i] * a[i] + 0.1 * static_cast<double>(i);
    CHECK(weighted_kendall_tau(a, mono) > 0.0);
  }
}

TEST_CASE("select_seed picks the sequence identical to the full graph") {
  const std::vector<double> full{0.6, 0.8, 0.7};
  PerfGrid g = grid_from({{0.9, 0.1, 0.5}, full, {0.6, 0.5, 0.7}}, full);
  SeedSelection s = select_seed(g, dummy_archs(3));
  CHECK(s.seed_subgraph == 1);
  CHECK(s.scores[1].tau == 1.0);
  CHECK(s.seed_architecture == dummy_archs(3)[1]);
  CHECK(s.strategy == SelectionStrategy::rank_consistency);
}

TEST_CASE("identical subgraphs fall back to index 0") {
  const std::vector<double> seq{0.4, 0.2, 0.9};
  PerfGrid g = grid_from({seq, seq, seq}, {0.1, 0.9, 0.5});
  CHECK(select_seed(g, dummy_archs(3)).seed_subgraph == 0);
}

TEST_CASE("equal tau goes to the subgraph with the higher mean") {
  PerfGrid g = grid_from({{0.1, 0.2}, {0.5, 0.6}}, {0.2, 0.3});
  CHECK(select_seed(g, dummy_archs(2)).seed_subgraph == 1);
}

TEST_CASE("select_seed agrees with recomputed scores on random grids") {
  Rng rng(11);
  for (int t = 0; t < 5; ++t) {
    const std::size_t k = 5;
    std::vector<std::vector<double>> subs;
    for (std::size_t i = 0; i < k; ++i) subs.push_back(random_sequence(rng, k, false));
    const auto full = random_sequence(rng, k, false);
    SeedSelection s = select_seed(grid_from(subs, full), dummy_archs(k));
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i)
      if (kendall_oracle(subs[i], full) > kendall_oracle(subs[best], full)) best = i;
    CHECK(s.seed_subgraph == static_cast<int>(best));
    for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(s.scores[i].tau - kendall_oracle(subs[i], full)) < 1e-12);
  }
}

TEST_CASE("ablation selectors") {
  Rng rng(12);
  std::vector<std::vector<double>> subs;
  for (int i = 0; i < 6; ++i) subs.push_back(random_sequence(rng, 6, false));
  const auto full = random_sequence(rng, 6, false);
  const PerfGrid g = grid_from(subs, full);
  const auto archs = dummy_archs(6);

  SeedSelection on_g = select_seed_variant(SelectionStrategy::highest_on_G, g, archs);
  CHECK(on_g.seed_subgraph == std::max_element(full.begin(), full.end()) - full.begin());
  CHECK(on_g.scores.size() == 6);

  std::vector<double> mean(6, 0.0);
  for (const auto& s : subs)
    for (std::size_t a = 0; a < 6; ++a) mean[a] += s[a] / 6.0;
  SeedSelection avg = select_seed_variant(SelectionStrategy::highest_avg_subgraphs, g, archs);
  CHECK(avg.seed_subgraph == std::max_element(mean.begin(), mean.end()) - mean.begin());

  const int r1 = select_seed_variant(SelectionStrategy::random, g, archs, 5).seed_subgraph;
  CHECK(r1 == select_seed_variant(SelectionStrategy::random, g, archs, 5).seed_subgraph);
  std::set<int> seen;
  for (std::uint64_t s = 0; s < 60; ++s) seen.insert(select_seed_variant(SelectionStrategy::random, g, archs, s).seed_subgraph);
  CHECK(seen.size() == 6);

  CHECK(select_seed_variant(SelectionStrategy::rank_consistency, g, archs).seed_subgraph == select_seed(g, archs).seed_subgraph);
  for (auto s : {SelectionStrategy::rank_consistency, SelectionStrategy::random, SelectionStrategy::highest_on_G,
                 SelectionStrategy::highest_avg_subgraphs})
    CHECK(parse_strategy(strategy_name(s)) == s);
  CHECK_THROWS_AS(parse_strategy("best"), ConfigError);
}

TEST_CASE("performance grid: counts, determinism, decomposition, worker independence") {
  SbmParams p;
  p.block_sizes = {40, 40};
  p.p_in = 0.15;
  p.p_out = 0.02;
  p.feat_dim = 4;
  p.seed = 3;
  Graph g = generate_sbm(p);
  std::vector<Subgraph> subs;
  for (std::uint64_t i = 0; i < 2; ++i) subs.push_back(sample_subgraph(g, {SamplerKind::node_uniform, 40, 10 + i}));
  std::vector<DerivedArchitecture> archs = dummy_archs(2);
  archs[1].ops = {OpKind::sage_mean};
  SearchConfig cfg;
  cfg.epochs_eval = 10;

  PerfGrid grid = build_perf_sequences(archs, subs, g, cfg, 99, 1);
  CHECK(grid.runs.size() == 6);
  CHECK(grid.subgraphs.size() == 2);
  for (const auto& s : grid.subgraphs) CHECK(s.values.size() == 2);
  CHECK(grid.full.values.size() == 2);
  CHECK(grid.full.graph_id == "G");

  PerfGrid again = build_perf_sequences(archs, subs, g, cfg, 99, 3);
  CHECK(again.full.values == grid.full.values);
  for (std::size_t i = 0; i < 2; ++i) CHECK(again.subgraphs[i].values == grid.subgraphs[i].values);

  for (const PerfRun& r : grid.runs) {
    const Graph& data = r.graph == 2 ? g : subs[static_cast<std::size_t>(r.graph)].graph;
    CHECK(r.seed == perf_seed(99, r.arch, r.graph));
    CHECK(train_eval(archs[static_cast<std::size_t>(r.arch)], data, cfg, r.seed).val_accuracy == r.val_accuracy);
  }
  CHECK_THROWS_AS(build_perf_sequences(std::span(archs).first(1), std::span(subs).first(1), g, cfg, 1), std::invalid_argument);
}
