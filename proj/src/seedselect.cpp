#include "sagnas/seedselect.hpp"

#include "sagnas/errors.hpp"
#include "sagnas/kendall.hpp"
#include "sagnas/parallel.hpp"
#include "sagnas/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace sagnas {

std::uint64_t perf_seed(std::uint64_t master, int arch, int graph) {
  return derive_seed(master, "perf", {static_cast<std::uint64_t>(arch), static_cast<std::uint64_t>(graph)});
}

PerfGrid build_perf_sequences(std::span<const DerivedArchitecture> archs, std::span<const Subgraph> subgraphs,
                              const Graph& full, const SearchConfig& cfg, std::uint64_t master, int workers) {
  const auto k = static_cast<int>(archs.size());
  if (k < 2) throw std::invalid_argument("build_perf_sequences: need at least two architectures");
  if (subgraphs.size() != archs.size()) throw std::invalid_argument("build_perf_sequences: one subgraph per architecture");
  const int graphs = k + 1;
  std::vector<PerfRun> runs(static_cast<std::size_t>(k * graphs));
  parallel_for(runs.size(), workers, [&](std::size_t idx) {
    const int a = static_cast<int>(idx) / graphs;
    const int gi = static_cast<int>(idx) % graphs;
    const Graph& data = gi == k ? full : subgraphs[static_cast<std::size_t>(gi)].graph;
    const std::uint64_t seed = perf_seed(master, a, gi);
    const std::string where = "architecture " + std::to_string(a) + " on " +
                              (gi == k ? std::string("full graph") : "subgraph " + std::to_string(gi)) + ": ";
    try {
      runs[idx] = PerfRun{a, gi, seed, train_eval(archs[static_cast<std::size_t>(a)], data, cfg, seed).val_accuracy};
    } catch (const NumericalError& e) {
      throw NumericalError(where + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  });
  PerfGrid grid;
  for (int gi = 0; gi < k; ++gi) grid.subgraphs.push_back({subgraphs[static_cast<std::size_t>(gi)].parent_id + "/" + std::to_string(gi), {}});
  grid.full.graph_id = "G";
  for (const PerfRun& r : runs) {
    auto& seq = r.graph == k ? grid.full : grid.subgraphs[static_cast<std::size_t>(r.graph)];
    seq.values.push_back(r.val_accuracy);
  }
  grid.runs = std::move(runs);
  return grid;
}

std::string_view strategy_name(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::rank_consistency: return "rank_consistency";
    case SelectionStrategy::random: return "random";
    case SelectionStrategy::highest_on_G: return "highest_on_G";
    case SelectionStrategy::highest_avg_subgraphs: return "highest_avg_subgraphs";
  }
  return "?";
}

SelectionStrategy parse_strategy(std::string_view name) {
  for (auto s : {SelectionStrategy::rank_consistency, SelectionStrategy::random, SelectionStrategy::highest_on_G,
                 SelectionStrategy::highest_avg_subgraphs})
    if (strategy_name(s) == name) return s;
  throw ConfigError("unknown selection strategy '" + std::string(name) + "'");
}

namespace {

void check_grid(const PerfGrid& grid, std::span<const DerivedArchitecture> archs) {
  const std::size_t k = archs.size();
  if (k < 2 || grid.subgraphs.size() != k || grid.full.values.size() != k)
    throw std::invalid_argument("seed selection: malformed performance grid");
  for (const auto& s : grid.subgraphs)
    if (s.values.size() != k) throw std::invalid_argument("seed selection: malformed performance grid");
}

std::vector<KendallScore> score_all(const PerfGrid& grid) {
  std::vector<KendallScore> scores;
  for (std::size_t i = 0; i < grid.subgraphs.size(); ++i)
    scores.push_back({static_cast<int>(i), weighted_kendall_tau(grid.subgraphs[i].values, grid.full.values)});
  return scores;
}

int argmax_first(const std::vector<double>& xs) {
  int best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] > xs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

SeedSelection make_selection(SelectionStrategy s, int index, const PerfGrid& grid,
                             std::span<const DerivedArchitecture> archs) {
  SeedSelection sel;
  sel.strategy = s;
  sel.seed_subgraph = index;
  sel.seed_architecture = archs[static_cast<std::size_t>(index)];
  sel.scores = score_all(grid);
  sel.grid = grid;
  return sel;
}

}  // namespace

SeedSelection select_seed(const PerfGrid& grid, std::span<const DerivedArchitecture> archs) {
  check_grid(grid, archs);
  const auto scores = score_all(grid);
  auto mean = [&](std::size_t i) {
    const auto& v = grid.subgraphs[i].values;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const auto b = static_cast<std::size_t>(best);
    if (scores[i].tau > scores[b].tau || (scores[i].tau == scores[b].tau && mean(i) > mean(b)))
      best = static_cast<int>(i);
  }
  return make_selection(SelectionStrategy::rank_consistency, best, grid, archs);
}

SeedSelection select_seed_variant(SelectionStrategy strategy, const PerfGrid& grid,
                                  std::span<const DerivedArchitecture> archs, std::uint64_t seed) {
  check_grid(grid, archs);
  switch (strategy) {
    case SelectionStrategy::rank_consistency:
      return select_seed(grid, archs);
    case SelectionStrategy::random: {
      Rng rng(seed);
      return make_selection(strategy, static_cast<int>(uniform_index(rng, archs.size())), grid, archs);
    }
    case SelectionStrategy::highest_on_G:
      return make_selection(strategy, argmax_first(grid.full.values), grid, archs);
    case SelectionStrategy::highest_avg_subgraphs: {
      std::vector<double> mean(archs.size(), 0.0);
      for (const auto& s : grid.subgraphs)
        for (std::size_t a = 0; a < archs.size(); ++a) mean[a] += s.values[a];
      for (double& m : mean) m /= static_cast<double>(grid.subgraphs.size());
      return make_selection(strategy, argmax_first(mean), grid, archs);
    }
  }
  throw std::logic_error("unreachable selection strategy");
}

}  // namespace sagnas
