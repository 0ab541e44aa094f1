#include "sagnas/errors.hpp"
#include "sagnas/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sagnas: subgraph-driven graph neural architecture search"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "sagnas_out";
  std::string arch_path;
  std::string csv_path;
  std::string history_path;

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (key = value lines)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "artifact directory");
    return sub;
  };
  auto* pipeline = with_config(app.add_subcommand("pipeline", "run every stage end to end"));
  auto* gen = with_config(app.add_subcommand("gen-data", "build the dataset snapshot"));
  auto* sample = with_config(app.add_subcommand("sample", "draw the K subgraphs"));
  auto* search = with_config(app.add_subcommand("search-seed", "search every subgraph and select the seed"));
  auto* expand = with_config(app.add_subcommand("expand", "grow the seed architecture"));
  auto* evaluate = with_config(app.add_subcommand("evaluate", "train and test an architecture file"));
  evaluate->add_option("--arch", arch_path, "architecture file (default: <out>/final_arch.txt)");
  auto* kendall = app.add_subcommand("kendall", "weighted rank consistency of two CSV columns");
  kendall->add_option("csv", csv_path, "two-column CSV")->required();
  auto* report = app.add_subcommand("report", "entropy trajectory CSV from an expansion history");
  report->add_option("--history", history_path, "expansion_history.jsonl (default: <out>/expansion_history.jsonl)");
  report->add_option("--out", out_dir, "artifact directory");

  CLI11_PARSE(app, argc, argv);

  const char* stage = app.get_subcommands().front()->get_name().c_str();
  try {
    if (kendall->parsed()) {
      std::printf("%.17g\n", sagnas::kendall_from_csv(csv_path));
      return kExitOk;
    }
    if (report->parsed()) {
      const auto history = history_path.empty() ? std::filesystem::path(out_dir) / "expansion_history.jsonl"
                                                : std::filesystem::path(history_path);
      const auto csv = std::filesystem::path(out_dir) / "entropy_trajectory.csv";
      sagnas::write_entropy_trajectory(history, csv);
      std::cout << csv.string() << "\n";
      return kExitOk;
    }
    const sagnas::RunConfig cfg = sagnas::load_config(config_path);
    const std::filesystem::path out(out_dir);
    if (pipeline->parsed()) {
      const auto summary = sagnas::run_pipeline(cfg, out);
      std::cout << "seed subgraph " << summary["seed_subgraph"] << ", test accuracy "
                << summary["final"]["test_accuracy"] << "\n";
    } else if (gen->parsed()) {
      sagnas::stage_gen_data(cfg, out);
    } else if (sample->parsed()) {
      sagnas::stage_sample(cfg, out);
    } else if (search->parsed()) {
      const auto stage = sagnas::stage_search_seed(cfg, out);
      std::cout << "seed subgraph " << stage.selection.seed_subgraph << "\n";
    } else if (expand->parsed()) {
      const auto result = sagnas::stage_expand(cfg, out);
      std::cout << "splits " << result.history.size() << "\n";
    } else if (evaluate->parsed()) {
      const auto r = sagnas::stage_evaluate(cfg, out, arch_path);
      std::cout << "val " << r.val_accuracy;
      if (r.test_accuracy) std::cout << " test " << *r.test_accuracy;
      std::cout << "\n";
    }
  } catch (const sagnas::ConfigError& e) {
    std::cerr << stage << ": config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sagnas::DataError& e) {
    std::cerr << stage << ": data error: " << e.what() << "\n";
    return kExitData;
  } catch (const sagnas::NumericalError& e) {
    std::cerr << stage << ": numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << stage << ": " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
