#include "sagnas/graph_io.hpp"

#include "sagnas/binary.hpp"
#include "sagnas/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sagnas {
namespace {

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

template <typename T>
T parse_number(const std::string& tok, const std::filesystem::path& path, std::size_t line_no) {
  T value{};
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" + tok + "'");
  }
  return value;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

Matrix read_features(const std::filesystem::path& path) {
  auto in = open(path);
  std::string line;
  std::size_t line_no = 0;
  Index n = -1, dim = -1;
  while (n < 0 && std::getline(in, line)) {
    ++line_no;
    auto t = tokens(strip_comment(line));
    if (t.empty()) continue;
    if (t.size() != 2) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected header 'n feat_dim'");
    n = parse_number<Index>(t[0], path, line_no);
    dim = parse_number<Index>(t[1], path, line_no);
  }
  if (n < 0 || dim <= 0) throw DataError(path.string() + ": missing or invalid feature header");
  Matrix x(n, dim);
  Index row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = tokens(strip_comment(line));
    if (t.empty()) continue;
    if (row >= n) throw DataError(path.string() + ": feature row count exceeds header n=" + std::to_string(n));
    if (static_cast<Index>(t.size()) != dim)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) + " values");
    for (Index c = 0; c < dim; ++c) x(row, c) = parse_number<double>(t[c], path, line_no);
    ++row;
  }
  if (row != n) throw DataError(path.string() + ": feature row count " + std::to_string(row) + " does not match n=" + std::to_string(n));
  return x;
}

std::vector<std::pair<Index, Index>> read_edges(const std::filesystem::path& path, Index n) {
  auto in = open(path);
  std::vector<std::pair<Index, Index>> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = tokens(strip_comment(line));
    if (t.empty()) continue;
    if (t.size() != 2) throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed edge line");
    const auto u = parse_number<Index>(t[0], path, line_no);
    const auto v = parse_number<Index>(t[1], path, line_no);
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": node index out of range [0, " +
                      std::to_string(n) + ")");
    edges.emplace_back(u, v);
  }
  return edges;
}

std::vector<int> read_labels(const std::filesystem::path& path, Index n) {
  auto in = open(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = tokens(strip_comment(line));
    if (t.empty()) continue;
    if (t.size() != 1) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected one label");
    labels.push_back(parse_number<int>(t[0], path, line_no));
  }
  if (static_cast<Index>(labels.size()) != n)
    throw DataError(path.string() + ": label count " + std::to_string(labels.size()) + " does not match n=" + std::to_string(n));
  return labels;
}

std::vector<NodeSplit> read_mask_file(const std::filesystem::path& path, Index n) {
  auto in = open(path);
  std::vector<NodeSplit> split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = tokens(strip_comment(line));
    if (t.empty()) continue;
    if (t[0] == "train") split.push_back(NodeSplit::train);
    else if (t[0] == "val") split.push_back(NodeSplit::val);
    else if (t[0] == "test") split.push_back(NodeSplit::test);
    else if (t[0] == "none") split.push_back(NodeSplit::none);
    else throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown split token '" + t[0] + "'");
  }
  if (static_cast<Index>(split.size()) != n)
    throw DataError(path.string() + ": mask count does not match n=" + std::to_string(n));
  return split;
}

const char* split_token(NodeSplit s) {
  switch (s) {
    case NodeSplit::train: return "train";
    case NodeSplit::val: return "val";
    case NodeSplit::test: return "test";
    case NodeSplit::none: break;
  }
  return "none";
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::ofstream create(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                 const std::filesystem::path& label_path, const SplitSpec& split_spec) {
  Matrix x = read_features(feature_path);
  const Index n = x.rows();
  auto edges = read_edges(edge_path, n);
  auto labels = read_labels(label_path, n);
  std::vector<NodeSplit> split;
  if (const auto* r = std::get_if<SplitRatios>(&split_spec)) split = random_split(n, r->train, r->val, r->seed);
  else split = read_mask_file(std::get<SplitMaskFile>(split_spec).path, n);
  return Graph::from_edges(n, edges, std::move(x), std::move(labels), std::move(split));
}

void save_graph_text(const Graph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = create(dir / "edges.txt");
    out << "# undirected edge list, one pair per line\n";
    for (Index v = 0; v < g.num_nodes(); ++v)
      for (Index u : g.neighbors(v))
        if (v < u) out << v << ' ' << u << '\n';
  }
  {
    auto out = create(dir / "features.txt");
    out << g.num_nodes() << ' ' << g.feature_dim() << '\n';
    for (Index v = 0; v < g.num_nodes(); ++v) {
      for (Index c = 0; c < g.feature_dim(); ++c) out << (c ? " " : "") << format_double(g.features()(v, c));
      out << '\n';
    }
  }
  {
    auto out = create(dir / "labels.txt");
    for (int l : g.labels()) out << l << '\n';
  }
  {
    auto out = create(dir / "split.txt");
    for (NodeSplit s : g.split()) out << split_token(s) << '\n';
  }
}

Graph load_graph_text(const std::filesystem::path& dir) {
  return load_graph(dir / "edges.txt", dir / "features.txt", dir / "labels.txt", SplitMaskFile{dir / "split.txt"});
}

std::string encode_graph(const Graph& g) {
  sagg::Writer w(sagg::PayloadKind::graph);
  const Index n = g.num_nodes();
  w.u64(static_cast<std::uint64_t>(n));
  w.u64(g.col_indices().size());
  w.u64(static_cast<std::uint64_t>(g.feature_dim()));
  w.u32(static_cast<std::uint32_t>(g.num_classes()));
  for (Index off : g.row_offsets()) w.u64(static_cast<std::uint64_t>(off));
  for (Index c : g.col_indices()) w.u64(static_cast<std::uint64_t>(c));
  for (Index v = 0; v < n; ++v)
    for (Index c = 0; c < g.feature_dim(); ++c) w.f64(g.features()(v, c));
  for (int l : g.labels()) w.i32(l);
  for (auto which : {NodeSplit::train, NodeSplit::val, NodeSplit::test})
    for (NodeSplit s : g.split()) w.u8(s == which ? 1 : 0);
  return w.data();
}

Graph decode_graph(std::string_view bytes) {
  sagg::Reader r(bytes, sagg::PayloadKind::graph);
  const auto n = static_cast<Index>(r.u64());
  const auto nnz = static_cast<Index>(r.u64());
  const auto dim = static_cast<Index>(r.u64());
  const auto classes = static_cast<int>(r.u32());
  if (n < 0 || nnz < 0 || dim < 0 || static_cast<std::size_t>(n) > bytes.size() ||
      static_cast<std::size_t>(nnz) > bytes.size())
    throw DataError("implausible SAGG graph header");
  std::vector<Index> offsets(static_cast<std::size_t>(n + 1));
  for (auto& o : offsets) o = static_cast<Index>(r.u64());
  std::vector<Index> cols(static_cast<std::size_t>(nnz));
  for (auto& c : cols) c = static_cast<Index>(r.u64());
  Matrix x(n, dim);
  for (Index v = 0; v < n; ++v)
    for (Index c = 0; c < dim; ++c) x(v, c) = r.f64();
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = r.i32();
  std::vector<NodeSplit> split(static_cast<std::size_t>(n), NodeSplit::none);
  for (auto which : {NodeSplit::train, NodeSplit::val, NodeSplit::test}) {
    for (Index v = 0; v < n; ++v) {
      if (r.u8() == 0) continue;
      if (split[v] != NodeSplit::none) throw DataError("overlapping masks in SAGG graph at node " + std::to_string(v));
      split[v] = which;
    }
  }
  if (!r.at_end()) throw DataError("trailing bytes after SAGG graph payload");
  return Graph(std::move(offsets), std::move(cols), std::move(x), std::move(labels), std::move(split), classes);
}

void save_snapshot(const Graph& g, const std::filesystem::path& path) { sagg::write_file(path, encode_graph(g)); }

Graph load_snapshot(const std::filesystem::path& path) { return decode_graph(sagg::read_file(path)); }

}  // namespace sagnas
