#include "sagnas/topology.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sagnas {

CellTopology::CellTopology(std::vector<std::vector<int>> sources) : sources_(std::move(sources)) {
  if (sources_.empty()) throw std::invalid_argument("cell needs at least one intermediate node");
  for (std::size_t k = 0; k < sources_.size(); ++k) {
    const int node = static_cast<int>(k) + 2;
    const auto& src = sources_[k];
    if (src.empty()) throw std::invalid_argument("intermediate node " + std::to_string(node) + " has no inputs");
    for (std::size_t a = 0; a < src.size(); ++a) {
      if (src[a] < 0 || src[a] >= node)
        throw std::invalid_argument("edge " + std::to_string(src[a]) + " -> " + std::to_string(node) +
                                    " does not go forward");
      for (std::size_t b = 0; b < a; ++b)
        if (src[a] == src[b]) throw std::invalid_argument("duplicate input edge into node " + std::to_string(node));
    }
  }
}

CellTopology CellTopology::dense(int intermediate) {
  std::vector<std::vector<int>> sources;
  for (int k = 0; k < intermediate; ++k) {
    std::vector<int> s;
    for (int i = 0; i < k + 2; ++i) s.push_back(i);
    sources.push_back(std::move(s));
  }
  return CellTopology(std::move(sources));
}

const std::vector<int>& CellTopology::sources(int node) const {
  if (!is_intermediate(node)) throw std::out_of_range("node " + std::to_string(node) + " is not intermediate");
  return sources_[static_cast<std::size_t>(node - 2)];
}

std::vector<CellEdge> CellTopology::edges() const {
  std::vector<CellEdge> out;
  for (int node = 2; node < node_count(); ++node)
    for (int s : sources(node)) out.push_back({s, node});
  return out;
}

std::size_t CellTopology::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : sources_) n += s.size();
  return n;
}

int CellTopology::edge_index(int src, int dst) const {
  if (!is_intermediate(dst)) return -1;
  int idx = 0;
  for (int node = 2; node < dst; ++node) idx += static_cast<int>(sources(node).size());
  const auto& s = sources(dst);
  const auto it = std::find(s.begin(), s.end(), src);
  return it == s.end() ? -1 : idx + static_cast<int>(it - s.begin());
}

std::vector<int> CellTopology::input_edges(int node) const {
  const int first = edge_index(sources(node).front(), node);
  std::vector<int> out(sources(node).size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = first + static_cast<int>(i);
  return out;
}

SplitResult split_node(const CellTopology& topo, int j) {
  if (!topo.is_intermediate(j)) throw std::invalid_argument("split_node: node " + std::to_string(j) + " is not intermediate");
  const int j0 = j, j1 = j + 1;
  auto remap = [&](int s) { return s < j ? s : (s == j ? j1 : s + 1); };

  std::vector<std::vector<int>> sources;
  for (int node = 2; node < topo.node_count(); ++node) {
    if (node == j) {
      sources.push_back(topo.sources(j));
      auto with_j0 = topo.sources(j);
      with_j0.push_back(j0);
      sources.push_back(std::move(with_j0));
      continue;
    }
    std::vector<int> s;
    for (int src : topo.sources(node)) s.push_back(remap(src));
    sources.push_back(std::move(s));
  }

  SplitResult result;
  result.topology = CellTopology(std::move(sources));
  for (const auto& r : topo.split_history()) result.topology.add_split_record(r);
  result.j0 = j0;
  result.j1 = j1;
  const auto new_edges = result.topology.edges();
  for (std::size_t e = 0; e < new_edges.size(); ++e) {
    const auto [src, dst] = new_edges[e];
    if (dst == j0 || dst == j1) {
      result.edge_origin.push_back(-1);
      result.fresh_edges.push_back(static_cast<int>(e));
      continue;
    }
    const int old_dst = dst < j ? dst : dst - 1;
    const int old_src = src < j ? src : (src == j1 ? j : src - 1);
    result.edge_origin.push_back(topo.edge_index(old_src, old_dst));
  }
  return result;
}

}  // namespace sagnas
