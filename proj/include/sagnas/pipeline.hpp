#pragma once

#include "sagnas/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <vector>

namespace sagnas {

inline constexpr int kReportSchemaVersion = 1;

/// Seeds derived from the master seed, one per stage role.
struct StageSeeds {
  std::uint64_t dataset, selection_random, perf_grid, expansion, final_eval;
  std::uint64_t sample(int i) const;
  std::uint64_t search(int i) const;

  explicit StageSeeds(std::uint64_t master);

 private:
  std::uint64_t master_;
};

Graph load_dataset(const RunConfig& cfg);
std::vector<Subgraph> sample_subgraphs(const RunConfig& cfg, const Graph& g);

struct SeedStage {
  std::vector<SearchResult> searches;
  SeedSelection selection;
  double search_seconds = 0.0;
  double evaluation_seconds = 0.0;
};

/// K independent searches (one per subgraph), the K×(K+1) evaluation grid and the
/// configured selector. Both parallel phases use cfg.workers threads.
SeedStage search_seed(const RunConfig& cfg, const Graph& g, std::span<const Subgraph> subgraphs);

ExpansionConfig expansion_config(const RunConfig& cfg);
EvalResult final_evaluation(const RunConfig& cfg, const DerivedArchitecture& arch, const Graph& g);

nlohmann::json config_json(const RunConfig& cfg);
nlohmann::json split_record_json(const SplitRecord& r);
nlohmann::json selection_report(const RunConfig& cfg, const SeedStage& stage, std::span<const Subgraph> subgraphs);

// Checkpoint of the expansion starting point: supernet tensors, topology, shape and
// the seed subgraph.
void save_seed_checkpoint(const std::filesystem::path& dir, const SupernetModel& model, const Subgraph& subgraph);
ExpansionState load_seed_checkpoint(const std::filesystem::path& dir);

// Stage entry points. Each reads the artifacts of the previous stage from `out`
// and writes its own there:
//   gen-data     graph.sagg
//   sample       subgraphs.json
//   search-seed  candidates/arch_<k>.txt, selection_report.json, seed_arch.txt, seed/
//   expand       expansion_history.jsonl, final_arch.txt
//   evaluate     evaluation.json
//   pipeline     all of the above plus summary.json
void stage_gen_data(const RunConfig& cfg, const std::filesystem::path& out);
void stage_sample(const RunConfig& cfg, const std::filesystem::path& out);
SeedStage stage_search_seed(const RunConfig& cfg, const std::filesystem::path& out);
ExpansionResult stage_expand(const RunConfig& cfg, const std::filesystem::path& out);
/// Evaluates `arch_path` (default out/final_arch.txt) on the stage graph.
EvalResult stage_evaluate(const RunConfig& cfg, const std::filesystem::path& out,
                          const std::filesystem::path& arch_path = {});
nlohmann::json run_pipeline(const RunConfig& cfg, const std::filesystem::path& out);

/// Two-column CSV (optional non-numeric header) to the weighted rank consistency.
double kendall_from_csv(const std::filesystem::path& csv);
/// expansion_history.jsonl to a CSV entropy trajectory.
void write_entropy_trajectory(const std::filesystem::path& history, const std::filesystem::path& csv);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace sagnas
