#include "sagnas/architecture.hpp"

#include "sagnas/binary.hpp"
#include "sagnas/errors.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <regex>
#include <sstream>

namespace sagnas {
namespace {

constexpr int kSchemaVersion = 1;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw DataError("architecture line " + std::to_string(line_no) + ": " + what);
}

SplitRecord parse_split(const std::string& line, std::size_t line_no) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(line);
  for (std::string tok; ss >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key=value in split record");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) fail(line_no, std::string("split record lacks '") + key + "'");
    return it->second;
  };
  auto num = [&](const char* key) {
    try {
      std::size_t used = 0;
      const double v = std::stod(get(key), &used);
      if (used != get(key).size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      fail(line_no, std::string("bad number for '") + key + "'");
    }
  };
  SplitRecord r;
  r.iteration = static_cast<int>(num("iteration"));
  r.split_node = static_cast<int>(num("node"));
  r.node_j0 = static_cast<int>(num("j0"));
  r.node_j1 = static_cast<int>(num("j1"));
  r.random_choice = num("random") != 0.0;
  r.group_entropy_before = num("group_before");
  r.group_entropy_after = num("group_after");
  r.overall_entropy_before = num("overall_before");
  r.overall_entropy_after = num("overall_after");
  r.architecture_entropy_before = num("arch_before");
  r.architecture_entropy_after = num("arch_after");
  r.subgraph_nodes_before = static_cast<std::size_t>(num("subgraph_before"));
  r.subgraph_nodes_after = static_cast<std::size_t>(num("subgraph_after"));
  return r;
}

}  // namespace

std::string_view node_norm_name(NodeNorm norm) { return norm == NodeNorm::layer ? "layer" : "none"; }

NodeNorm parse_node_norm(std::string_view name) {
  if (name == "layer") return NodeNorm::layer;
  if (name == "none") return NodeNorm::none;
  throw ConfigError("unknown node normalization '" + std::string(name) + "'");
}

std::string format_architecture(const DerivedArchitecture& arch) {
  std::ostringstream out;
  out << "# sagnas derived architecture\n";
  out << "schema_version: " << kSchemaVersion << "\n";
  out << "cells: " << arch.cells << "\n";
  out << "hidden: " << arch.hidden << "\n";
  out << "node_norm: " << node_norm_name(arch.node_norm) << "\n";
  out << "intermediate_nodes: " << arch.topology.intermediate_count() << "\n";
  out << "edges:\n";
  const auto edges = arch.topology.edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    out << "  (" << edges[e].src << " -> " << edges[e].dst << "): " << op_name(arch.ops[e]) << "\n";
  out << "splits:\n";
  for (const auto& r : arch.topology.split_history()) {
    out << "  iteration=" << r.iteration << " node=" << r.split_node << " j0=" << r.node_j0 << " j1=" << r.node_j1
        << " random=" << (r.random_choice ? 1 : 0) << " group_before=" << g17(r.group_entropy_before)
        << " group_after=" << g17(r.group_entropy_after) << " overall_before=" << g17(r.overall_entropy_before)
        << " overall_after=" << g17(r.overall_entropy_after) << " arch_before=" << g17(r.architecture_entropy_before)
        << " arch_after=" << g17(r.architecture_entropy_after) << " subgraph_before=" << r.subgraph_nodes_before
        << " subgraph_after=" << r.subgraph_nodes_after << "\n";
  }
  return out.str();
}

DerivedArchitecture parse_architecture(std::string_view text) {
  static const std::regex edge_re(R"(\(\s*(\d+)\s*->\s*(\d+)\s*\)\s*:\s*([a-z_0-9]+))");
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  enum class Section { header, edges, splits } section = Section::header;
  int version = -1, cells = -1, intermediate = -1;
  long long hidden = -1;
  NodeNorm node_norm = NodeNorm::layer;
  std::map<int, std::vector<std::pair<int, OpKind>>> by_dst;
  std::vector<SplitRecord> splits;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line == "edges:") {
      section = Section::edges;
      continue;
    }
    if (line == "splits:") {
      section = Section::splits;
      continue;
    }
    if (section == Section::edges) {
      std::smatch m;
      if (!std::regex_match(line, m, edge_re)) fail(line_no, "expected '(src -> dst): op'");
      OpKind op;
      try {
        op = parse_op(m[3].str());
      } catch (const ConfigError& e) {
        fail(line_no, e.what());
      }
      by_dst[std::stoi(m[2].str())].emplace_back(std::stoi(m[1].str()), op);
      continue;
    }
    if (section == Section::splits) {
      splits.push_back(parse_split(line, line_no));
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) fail(line_no, "expected 'key: value'");
    const std::string key = trim(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 1));
    if (key == "node_norm") {
      try {
        node_norm = parse_node_norm(value);
      } catch (const ConfigError& e) {
        fail(line_no, e.what());
      }
      continue;
    }
    long long v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) fail(line_no, "expected an integer for " + key);
    if (key == "schema_version") version = static_cast<int>(v);
    else if (key == "cells") cells = static_cast<int>(v);
    else if (key == "hidden") hidden = v;
    else if (key == "intermediate_nodes") intermediate = static_cast<int>(v);
    else fail(line_no, "unknown key '" + key + "'");
  }
  if (version != kSchemaVersion) throw DataError("architecture schema_version " + std::to_string(version) + " unsupported");
  if (cells <= 0 || hidden <= 0 || intermediate <= 0) throw DataError("architecture header incomplete");
  std::vector<std::vector<int>> sources(static_cast<std::size_t>(intermediate));
  for (const auto& [dst, list] : by_dst) {
    if (dst < 2 || dst >= intermediate + 2) throw DataError("edge destination " + std::to_string(dst) + " out of range");
    for (const auto& [src, op] : list) sources[static_cast<std::size_t>(dst - 2)].push_back(src);
  }
  DerivedArchitecture arch;
  try {
    arch.topology = CellTopology(sources);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("architecture topology invalid: ") + e.what());
  }
  for (const auto& [dst, list] : by_dst)
    for (const auto& [src, op] : list) arch.ops.push_back(op);
  for (const auto& r : splits) arch.topology.add_split_record(r);
  arch.cells = cells;
  arch.hidden = hidden;
  arch.node_norm = node_norm;
  return arch;
}

void save_architecture(const DerivedArchitecture& arch, const std::filesystem::path& path) {
  sagg::write_file(path, format_architecture(arch));
}

DerivedArchitecture load_architecture(const std::filesystem::path& path) {
  return parse_architecture(sagg::read_file(path));
}

}  // namespace sagnas
