#include "sagnas/pipeline.hpp"

#include "sagnas/binary.hpp"
#include "sagnas/errors.hpp"
#include "sagnas/graph_io.hpp"
#include "sagnas/kendall.hpp"
#include "sagnas/parallel.hpp"
#include "sagnas/rng.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sagnas {

namespace fs = std::filesystem;
using nlohmann::json;

StageSeeds::StageSeeds(std::uint64_t master)
    : dataset(derive_seed(master, "dataset")),
      selection_random(derive_seed(master, "select.random")),
      perf_grid(derive_seed(master, "perf.grid")),
      expansion(derive_seed(master, "expansion")),
      final_eval(derive_seed(master, "final.eval")),
      master_(master) {}

std::uint64_t StageSeeds::sample(int i) const { return derive_seed(master_, "sample", {static_cast<std::uint64_t>(i)}); }
std::uint64_t StageSeeds::search(int i) const { return derive_seed(master_, "search", {static_cast<std::uint64_t>(i)}); }

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SamplerConfig sampler_config(const RunConfig& cfg, const Graph& g, int i) {
  const auto size = static_cast<Index>(std::llround(cfg.subgraph_fraction * static_cast<double>(g.num_nodes())));
  return SamplerConfig{cfg.sampler, std::max<Index>(size, 1), StageSeeds(cfg.master_seed).sample(i)};
}

std::string subgraph_id(int i) { return "SG" + std::to_string(i); }

json eval_json(const EvalResult& r) {
  json j;
  j["val_accuracy"] = r.val_accuracy;
  j["test_accuracy"] = r.test_accuracy ? json(*r.test_accuracy) : json(nullptr);
  j["seed"] = r.seed;
  j["final_loss"] = r.loss_curve.empty() ? json(nullptr) : json(r.loss_curve.back());
  return j;
}

std::vector<Subgraph> read_subgraphs(const fs::path& path, const Graph& g) {
  const json doc = read_json(path);
  if (doc.value("schema_version", 0) != kReportSchemaVersion) throw DataError(path.string() + ": unsupported schema");
  std::vector<Subgraph> out;
  for (const auto& s : doc.at("subgraphs")) {
    const auto nodes = s.at("nodes").get<std::vector<Index>>();
    out.push_back(induced_subgraph(g, nodes, s.at("id").get<std::string>(),
                                   derive_seed(s.at("seed").get<std::uint64_t>(), "subgraph.split")));
  }
  return out;
}

}  // namespace

Graph load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.source == "sbm") {
    SbmParams p = cfg.dataset.sbm;
    p.seed = StageSeeds(cfg.master_seed).dataset;
    return generate_sbm(p);
  }
  SplitSpec split = cfg.dataset.split.empty()
                        ? SplitSpec(SplitRatios{cfg.dataset.train_ratio, cfg.dataset.val_ratio, StageSeeds(cfg.master_seed).dataset})
                        : SplitSpec(SplitMaskFile{cfg.dataset.split});
  return load_graph(cfg.dataset.edges, cfg.dataset.features, cfg.dataset.labels, split);
}

std::vector<Subgraph> sample_subgraphs(const RunConfig& cfg, const Graph& g) {
  std::vector<Subgraph> out;
  for (int i = 0; i < cfg.subgraphs; ++i) out.push_back(sample_subgraph(g, sampler_config(cfg, g, i), subgraph_id(i)));
  return out;
}

SeedStage search_seed(const RunConfig& cfg, const Graph& g, std::span<const Subgraph> subgraphs) {
  const StageSeeds seeds(cfg.master_seed);
  const auto k = subgraphs.size();
  std::vector<std::optional<SearchResult>> results(k);
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(k, cfg.workers, [&](std::size_t i) {
    SearchConfig sc = cfg.search;
    sc.seed = seeds.search(static_cast<int>(i));
    try {
      results[i] = darts_search(subgraphs[i].graph, CellTopology::dense(cfg.intermediate), OpSpace(cfg.ops), cfg.hidden,
                                cfg.cells, sc, cfg.node_norm);
    } catch (const NumericalError& e) {
      throw NumericalError("search on " + subgraphs[i].parent_id + ": " + e.what());
    }
  });
  SeedStage stage;
  stage.search_seconds = seconds_since(t0);
  std::vector<DerivedArchitecture> archs;
  for (auto& r : results) {
    archs.push_back(r->architecture);
    stage.searches.push_back(std::move(*r));
  }
  const auto t1 = std::chrono::steady_clock::now();
  const PerfGrid grid = build_perf_sequences(archs, subgraphs, g, cfg.search, seeds.perf_grid, cfg.workers);
  stage.evaluation_seconds = seconds_since(t1);
  stage.selection = select_seed_variant(cfg.strategy, grid, archs, seeds.selection_random);
  return stage;
}

ExpansionConfig expansion_config(const RunConfig& cfg) {
  ExpansionConfig e;
  e.iterations = cfg.expansion_iterations;
  e.neighbors = cfg.expansion_neighbors;
  e.random_split = cfg.expansion_random_split;
  e.search = cfg.search;
  e.search.epochs_search = cfg.expansion_epochs;
  e.seed = StageSeeds(cfg.master_seed).expansion;
  return e;
}

EvalResult final_evaluation(const RunConfig& cfg, const DerivedArchitecture& arch, const Graph& g) {
  return train_eval(arch, g, cfg.search, StageSeeds(cfg.master_seed).final_eval);
}

json config_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
  return j;
}

json split_record_json(const SplitRecord& r) {
  return json{{"iteration", r.iteration},
              {"split_node", r.split_node},
              {"node_j0", r.node_j0},
              {"node_j1", r.node_j1},
              {"random_choice", r.random_choice},
              {"group_entropy_before", r.group_entropy_before},
              {"group_entropy_after", r.group_entropy_after},
              {"overall_entropy_before", r.overall_entropy_before},
              {"overall_entropy_after", r.overall_entropy_after},
              {"architecture_entropy_before", r.architecture_entropy_before},
              {"architecture_entropy_after", r.architecture_entropy_after},
              {"subgraph_nodes_before", r.subgraph_nodes_before},
              {"subgraph_nodes_after", r.subgraph_nodes_after}};
}

json selection_report(const RunConfig& cfg, const SeedStage& stage, std::span<const Subgraph> subgraphs) {
  const StageSeeds seeds(cfg.master_seed);
  const SeedSelection& sel = stage.selection;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = config_json(cfg);
  j["strategy"] = std::string(strategy_name(sel.strategy));
  j["seed_subgraph"] = sel.seed_subgraph;
  j["seed_architecture"] = format_architecture(sel.seed_architecture);
  json subs = json::array();
  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    subs.push_back({{"id", subgraphs[i].parent_id},
                    {"nodes", subgraphs[i].node_map.size()},
                    {"sample_seed", seeds.sample(static_cast<int>(i))},
                    {"search_seed", seeds.search(static_cast<int>(i))},
                    {"tau", sel.scores[i].tau},
                    {"sequence", sel.grid.subgraphs[i].values},
                    {"final_search_loss", stage.searches[i].trace.train_loss.empty()
                                              ? json(nullptr)
                                              : json(stage.searches[i].trace.train_loss.back())}});
  }
  j["subgraphs"] = subs;
  j["full_sequence"] = sel.grid.full.values;
  json runs = json::array();
  for (const PerfRun& r : sel.grid.runs)
    runs.push_back({{"arch", r.arch}, {"graph", r.graph}, {"seed", r.seed}, {"val_accuracy", r.val_accuracy}});
  j["runs"] = runs;
  j["seeds"] = {{"master", cfg.master_seed},
                {"dataset", seeds.dataset},
                {"perf_grid", seeds.perf_grid},
                {"selection_random", seeds.selection_random}};
  return j;
}

void save_seed_checkpoint(const fs::path& dir, const SupernetModel& model, const Subgraph& subgraph) {
  json state;
  state["schema_version"] = kReportSchemaVersion;
  json sources = json::array();
  for (int j = 2; j < model.topology().node_count(); ++j) sources.push_back(model.topology().sources(j));
  state["sources"] = sources;
  std::vector<std::string> ops;
  for (OpKind o : model.ops().ops()) ops.emplace_back(op_name(o));
  state["ops"] = ops;
  state["shape"] = {{"feat_dim", model.shape().feat_dim},
                    {"hidden", model.shape().hidden},
                    {"num_classes", model.shape().num_classes},
                    {"cells", model.shape().cells},
                    {"node_norm", node_norm_name(model.shape().node_norm)}};
  state["subgraph"] = {{"id", subgraph.parent_id}, {"nodes", subgraph.node_map}};
  write_json(dir / "state.json", state);
  sagg::write_file(dir / "model.sagg", sagg::encode_tensors(model.state_dict()));
  save_snapshot(subgraph.graph, dir / "subgraph.sagg");
}

ExpansionState load_seed_checkpoint(const fs::path& dir) {
  const json state = read_json(dir / "state.json");
  if (state.value("schema_version", 0) != kReportSchemaVersion) throw DataError((dir / "state.json").string() + ": unsupported schema");
  CellTopology topo(state.at("sources").get<std::vector<std::vector<int>>>());
  std::vector<OpKind> ops;
  for (const auto& name : state.at("ops")) ops.push_back(parse_op(name.get<std::string>()));
  const auto& sh = state.at("shape");
  ModelShape shape{sh.at("feat_dim").get<Index>(), sh.at("hidden").get<Index>(), sh.at("num_classes").get<int>(),
                   sh.at("cells").get<int>(), parse_node_norm(sh.value("node_norm", "layer"))};
  SupernetModel model(std::move(topo), OpSpace(std::move(ops)), shape, 0);
  model.load_state_dict(sagg::decode_tensors(sagg::read_file(dir / "model.sagg")), true);
  Subgraph sg{load_snapshot(dir / "subgraph.sagg"), state.at("subgraph").at("nodes").get<std::vector<Index>>(),
              state.at("subgraph").at("id").get<std::string>()};
  return ExpansionState{std::move(model), std::move(sg), 0};
}

void stage_gen_data(const RunConfig& cfg, const fs::path& out) { save_snapshot(load_dataset(cfg), out / "graph.sagg"); }

void stage_sample(const RunConfig& cfg, const fs::path& out) {
  const Graph g = load_snapshot(out / "graph.sagg");
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["sampler"] = std::string(sampler_name(cfg.sampler));
  json subs = json::array();
  for (int i = 0; i < cfg.subgraphs; ++i) {
    const SamplerConfig sc = sampler_config(cfg, g, i);
    subs.push_back({{"id", subgraph_id(i)}, {"seed", sc.seed}, {"nodes", sample_nodes(g, sc)}});
  }
  doc["subgraphs"] = subs;
  write_json(out / "subgraphs.json", doc);
}

SeedStage stage_search_seed(const RunConfig& cfg, const fs::path& out) {
  const Graph g = load_snapshot(out / "graph.sagg");
  const auto subgraphs = read_subgraphs(out / "subgraphs.json", g);
  if (static_cast<int>(subgraphs.size()) != cfg.subgraphs)
    throw DataError("subgraphs.json holds " + std::to_string(subgraphs.size()) + " subgraphs, config expects " +
                    std::to_string(cfg.subgraphs));
  SeedStage stage = search_seed(cfg, g, subgraphs);
  for (std::size_t i = 0; i < stage.searches.size(); ++i)
    save_architecture(stage.searches[i].architecture, out / "candidates" / ("arch_" + std::to_string(i) + ".txt"));
  write_json(out / "selection_report.json", selection_report(cfg, stage, subgraphs));
  save_architecture(stage.selection.seed_architecture, out / "seed_arch.txt");
  const auto s = static_cast<std::size_t>(stage.selection.seed_subgraph);
  save_seed_checkpoint(out / "seed", stage.searches[s].model, subgraphs[s]);
  return stage;
}

ExpansionResult stage_expand(const RunConfig& cfg, const fs::path& out) {
  const Graph g = load_snapshot(out / "graph.sagg");
  ExpansionResult result = run_expansion(load_seed_checkpoint(out / "seed"), g, expansion_config(cfg));
  std::string lines;
  for (const SplitRecord& r : result.history) lines += split_record_json(r).dump() + "\n";
  sagg::write_file(out / "expansion_history.jsonl", lines);
  save_architecture(result.architecture, out / "final_arch.txt");
  return result;
}

EvalResult stage_evaluate(const RunConfig& cfg, const fs::path& out, const fs::path& arch_path) {
  const Graph g = load_snapshot(out / "graph.sagg");
  const DerivedArchitecture arch = load_architecture(arch_path.empty() ? out / "final_arch.txt" : arch_path);
  const EvalResult r = final_evaluation(cfg, arch, g);
  json j = eval_json(r);
  j["schema_version"] = kReportSchemaVersion;
  j["architecture"] = format_architecture(arch);
  j["config"] = config_json(cfg);
  j["timing"] = {{"wall_seconds", r.wall_seconds}};
  write_json(out / "evaluation.json", j);
  return r;
}

json run_pipeline(const RunConfig& cfg, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  stage_gen_data(cfg, out);
  stage_sample(cfg, out);
  const SeedStage seed = stage_search_seed(cfg, out);
  const ExpansionResult expansion = stage_expand(cfg, out);
  const EvalResult final_eval = stage_evaluate(cfg, out);

  json summary;
  summary["schema_version"] = kReportSchemaVersion;
  summary["config"] = config_json(cfg);
  summary["seed_subgraph"] = seed.selection.seed_subgraph;
  summary["seed_tau"] = seed.selection.scores[static_cast<std::size_t>(seed.selection.seed_subgraph)].tau;
  summary["seed_overall_entropy"] = expansion.seed_overall_entropy;
  json hist = json::array();
  for (const SplitRecord& r : expansion.history) hist.push_back(split_record_json(r));
  summary["expansion"] = hist;
  summary["final_architecture"] = format_architecture(expansion.architecture);
  summary["final"] = eval_json(final_eval);
  summary["notes"] = {
      {"expansion_weights", "surviving operation weights warm-started; cell output and classifier re-initialized"},
      {"lambda", cfg.search.lambda}};
  summary["timing"] = {{"seed_search_seconds", seed.search_seconds},
                       {"seed_evaluation_seconds", seed.evaluation_seconds},
                       {"final_eval_seconds", final_eval.wall_seconds},
                       {"total_seconds", seconds_since(t0)}};
  write_json(out / "summary.json", summary);
  return summary;
}

double kendall_from_csv(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw DataError("cannot open " + csv.string());
  std::vector<double> a, b;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError(csv.string() + ":" + std::to_string(line_no) + ": expected two columns");
    try {
      const std::string l = line.substr(0, comma), r = line.substr(comma + 1);
      const double x = std::stod(l);
      const double y = std::stod(r);
      a.push_back(x);
      b.push_back(y);
    } catch (const std::exception&) {
      if (line_no == 1 && a.empty()) continue;  // header
      throw DataError(csv.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  if (a.size() < 2) throw DataError(csv.string() + ": need at least two rows");
  return weighted_kendall_tau(a, b);
}

void write_entropy_trajectory(const fs::path& history, const fs::path& csv) {
  std::ifstream in(history);
  if (!in) throw DataError("cannot open " + history.string());
  std::ostringstream out;
  out << "iteration,split_node,group_entropy_before,group_entropy_after,overall_entropy_before,"
         "overall_entropy_after,architecture_entropy_before,architecture_entropy_after,subgraph_nodes\n";
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json r;
    try {
      r = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(history.string() + ": " + e.what());
    }
    out << r.at("iteration").get<int>() << ',' << r.at("split_node").get<int>() << ','
        << r.at("group_entropy_before").dump() << ',' << r.at("group_entropy_after").dump() << ','
        << r.at("overall_entropy_before").dump() << ',' << r.at("overall_entropy_after").dump() << ','
        << r.at("architecture_entropy_before").dump() << ',' << r.at("architecture_entropy_after").dump() << ','
        << r.at("subgraph_nodes_after").get<std::size_t>() << '\n';
  }
  sagg::write_file(csv, out.str());
}

void write_json(const fs::path& path, const json& j) { sagg::write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(sagg::read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace sagnas
