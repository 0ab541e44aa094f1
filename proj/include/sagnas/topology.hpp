#pragma once

#include <compare>
#include <vector>

namespace sagnas {

/// Directed cell edge src -> dst with src < dst.
struct CellEdge {
  int src = 0;
  int dst = 0;
  friend auto operator<=>(const CellEdge&, const CellEdge&) = default;
};

/// One node split performed during expansion, with the entropies around it.
struct SplitRecord {
  int iteration = 0;
  int split_node = 0;
  int node_j0 = 0;
  int node_j1 = 0;
  bool random_choice = false;
  /// Sum of node entropies of the unstable group: {j} before, {j0, j1} after.
  double group_entropy_before = 0.0;
  double group_entropy_after = 0.0;
  double overall_entropy_before = 0.0;
  double overall_entropy_after = 0.0;
  /// (ETP_stable + ETP_UG_before) / N and (ETP_stable + ETP_UG_after) / (N + 1).
  double architecture_entropy_before = 0.0;
  double architecture_entropy_after = 0.0;
  std::size_t subgraph_nodes_before = 0;
  std::size_t subgraph_nodes_after = 0;

  friend bool operator==(const SplitRecord&, const SplitRecord&) = default;
};

/// Cell DAG: nodes 0 and 1 are inputs, nodes 2..P+1 intermediate. Every intermediate
/// node lists its source nodes; sources strictly precede it, so index order is a
/// topological order.
class CellTopology {
 public:
  CellTopology() = default;
  /// sources[k] are the inputs of node k+2. Throws std::invalid_argument if malformed.
  explicit CellTopology(std::vector<std::vector<int>> sources);

  /// Every intermediate node receives an edge from all earlier nodes.
  static CellTopology dense(int intermediate);

  int intermediate_count() const { return static_cast<int>(sources_.size()); }
  int node_count() const { return intermediate_count() + 2; }
  bool is_intermediate(int node) const { return node >= 2 && node < node_count(); }
  const std::vector<int>& sources(int node) const;

  /// Edges ordered by destination, then by position in the source list.
  std::vector<CellEdge> edges() const;
  std::size_t edge_count() const;
  /// Position of src -> dst in edges(), or -1.
  int edge_index(int src, int dst) const;
  /// Edge indices entering `node`.
  std::vector<int> input_edges(int node) const;

  const std::vector<SplitRecord>& split_history() const { return history_; }
  void add_split_record(const SplitRecord& r) { history_.push_back(r); }

  friend bool operator==(const CellTopology&, const CellTopology&) = default;

 private:
  std::vector<std::vector<int>> sources_;
  std::vector<SplitRecord> history_;
};

struct SplitResult {
  CellTopology topology;
  int j0 = 0;
  int j1 = 0;
  /// For each edge of the new topology: index of the old edge it continues, or -1 if fresh.
  std::vector<int> edge_origin;
  /// New edge indices entering j0 or j1.
  std::vector<int> fresh_edges;
};

/// Replaces intermediate node j by j0 (same inputs) and j1 (same inputs plus j0 -> j1).
/// Edges that left j now leave j1; later nodes shift up by one.
SplitResult split_node(const CellTopology& topology, int j);

}  // namespace sagnas
