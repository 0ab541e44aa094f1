#include "sagnas/config.hpp"

#include "sagnas/errors.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace sagnas {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <class T>
T parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad number '" + std::string(s) + "'");
  return value;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("bad boolean '" + std::string(s) + "'");
}

std::string show(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

template <class T>
std::string show_int(T x) {
  return std::to_string(x);
}

struct Key {
  std::string_view name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SAGNAS_REAL(key, field)                                                     \
  Key {                                                                             \
    key, [](RunConfig& c, std::string_view v) { c.field = parse_number<double>(v); }, \
        [](const RunConfig& c) { return show(c.field); }                            \
  }
#define SAGNAS_INT(key, field)                                                                        \
  Key {                                                                                               \
    key, [](RunConfig& c, std::string_view v) { c.field = parse_number<decltype(c.field)>(v); },      \
        [](const RunConfig& c) { return show_int(c.field); }                                          \
  }
#define SAGNAS_TEXT(key, field)                                                    \
  Key {                                                                            \
    key, [](RunConfig& c, std::string_view v) { c.field = std::string(v); },       \
        [](const RunConfig& c) { return c.field; }                                 \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      SAGNAS_TEXT("dataset.source", dataset.source),
      Key{"dataset.sbm.block_sizes",
          [](RunConfig& c, std::string_view v) {
            c.dataset.sbm.block_sizes.clear();
            for (auto item : split_list(v)) c.dataset.sbm.block_sizes.push_back(parse_number<Index>(item));
          },
          [](const RunConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < c.dataset.sbm.block_sizes.size(); ++i)
              s += (i ? "," : "") + std::to_string(c.dataset.sbm.block_sizes[i]);
            return s;
          }},
      SAGNAS_REAL("dataset.sbm.p_in", dataset.sbm.p_in),
      SAGNAS_REAL("dataset.sbm.p_out", dataset.sbm.p_out),
      SAGNAS_INT("dataset.sbm.feat_dim", dataset.sbm.feat_dim),
      SAGNAS_REAL("dataset.sbm.noise", dataset.sbm.noise),
      SAGNAS_REAL("dataset.sbm.train_fraction", dataset.sbm.train_fraction),
      SAGNAS_REAL("dataset.sbm.val_fraction", dataset.sbm.val_fraction),
      SAGNAS_TEXT("dataset.edges", dataset.edges),
      SAGNAS_TEXT("dataset.features", dataset.features),
      SAGNAS_TEXT("dataset.labels", dataset.labels),
      SAGNAS_TEXT("dataset.split", dataset.split),
      SAGNAS_REAL("dataset.train_ratio", dataset.train_ratio),
      SAGNAS_REAL("dataset.val_ratio", dataset.val_ratio),
      Key{"sampler.kind", [](RunConfig& c, std::string_view v) { c.sampler = parse_sampler(v); },
          [](const RunConfig& c) { return std::string(sampler_name(c.sampler)); }},
      SAGNAS_REAL("sampler.fraction", subgraph_fraction),
      SAGNAS_INT("sampler.subgraphs", subgraphs),
      SAGNAS_INT("model.cells", cells),
      SAGNAS_INT("model.intermediate_nodes", intermediate),
      SAGNAS_INT("model.hidden", hidden),
      Key{"model.node_norm", [](RunConfig& c, std::string_view v) { c.node_norm = parse_node_norm(v); },
          [](const RunConfig& c) { return std::string(node_norm_name(c.node_norm)); }},
      Key{"model.ops",
          [](RunConfig& c, std::string_view v) {
            c.ops.clear();
            for (auto item : split_list(v)) c.ops.push_back(parse_op(item));
          },
          [](const RunConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < c.ops.size(); ++i) s += (i ? "," : "") + std::string(op_name(c.ops[i]));
            return s;
          }},
      SAGNAS_INT("search.epochs", search.epochs_search),
      SAGNAS_INT("search.epochs_eval", search.epochs_eval),
      SAGNAS_REAL("search.lr_w", search.lr_w),
      SAGNAS_REAL("search.lr_alpha", search.lr_alpha),
      SAGNAS_REAL("search.weight_decay", search.weight_decay),
      SAGNAS_REAL("search.lambda", search.lambda),
      SAGNAS_REAL("search.train_ratio", search.train_ratio),
      SAGNAS_INT("expansion.iterations", expansion_iterations),
      SAGNAS_INT("expansion.epochs", expansion_epochs),
      SAGNAS_INT("expansion.neighbors", expansion_neighbors),
      Key{"expansion.random_split", [](RunConfig& c, std::string_view v) { c.expansion_random_split = parse_bool(v); },
          [](const RunConfig& c) { return std::string(c.expansion_random_split ? "true" : "false"); }},
      Key{"selection.strategy", [](RunConfig& c, std::string_view v) { c.strategy = parse_strategy(v); },
          [](const RunConfig& c) { return std::string(strategy_name(c.strategy)); }},
      SAGNAS_INT("workers", workers),
      SAGNAS_INT("master_seed", master_seed),
  };
  return table;
}

#undef SAGNAS_REAL
#undef SAGNAS_INT
#undef SAGNAS_TEXT

}  // namespace

void RunConfig::validate() const {
  if (dataset.source != "sbm" && dataset.source != "files")
    throw ConfigError("dataset.source must be 'sbm' or 'files'");
  if (dataset.source == "sbm") {
    if (dataset.sbm.block_sizes.empty()) throw ConfigError("dataset.sbm.block_sizes is empty");
    for (Index b : dataset.sbm.block_sizes)
      if (b <= 0) throw ConfigError("dataset.sbm.block_sizes must be positive");
    if (dataset.sbm.p_in < 0 || dataset.sbm.p_in > 1 || dataset.sbm.p_out < 0 || dataset.sbm.p_out > 1)
      throw ConfigError("SBM probabilities must lie in [0, 1]");
    if (dataset.sbm.feat_dim <= 0) throw ConfigError("dataset.sbm.feat_dim must be positive");
  } else if (dataset.edges.empty() || dataset.features.empty() || dataset.labels.empty()) {
    throw ConfigError("dataset.source = files needs dataset.edges, dataset.features and dataset.labels");
  }
  if (!(subgraph_fraction > 0 && subgraph_fraction <= 1)) throw ConfigError("sampler.fraction must lie in (0, 1]");
  if (subgraphs < 2) throw ConfigError("sampler.subgraphs (K) must be at least 2");
  if (cells < 1) throw ConfigError("model.cells must be at least 1");
  if (intermediate < 1) throw ConfigError("model.intermediate_nodes must be at least 1");
  if (hidden < 1) throw ConfigError("model.hidden must be at least 1");
  if (ops.empty()) throw ConfigError("model.ops is empty");
  search.validate();
  if (expansion_iterations < 0) throw ConfigError("expansion.iterations must be non-negative");
  if (expansion_epochs < 0) throw ConfigError("expansion.epochs must be non-negative");
  if (expansion_neighbors < 0) throw ConfigError("expansion.neighbors must be non-negative");
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

RunConfig parse_config(std::string_view text, std::string_view origin) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const Key* entry = nullptr;
    for (const auto& k : keys())
      if (k.name == key) entry = &k;
    if (!entry) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    try {
      entry->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }
  return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
  try {
    if (const char* s = std::getenv("SAGNAS_SEED")) cfg.master_seed = parse_number<std::uint64_t>(trim(s));
    if (const char* w = std::getenv("SAGNAS_WORKERS")) cfg.workers = parse_number<int>(trim(w));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("environment override: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str(), path.string());
  apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(std::string(k.name), k.get(cfg));
  return out;
}

std::string format_config(const RunConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : config_entries(cfg)) s += k + " = " + v + "\n";
  return s;
}

}  // namespace sagnas
