#include "sagnas/supernet.hpp"

#include "sagnas/errors.hpp"
#include "sagnas/rng.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace sagnas {

OpSpace::OpSpace() : ops_(kOpRegistry.begin(), kOpRegistry.end()) {}

OpSpace::OpSpace(std::vector<OpKind> ops) : ops_(std::move(ops)) {
  if (ops_.empty()) throw ConfigError("operation space is empty");
  for (std::size_t i = 1; i < ops_.size(); ++i)
    if (static_cast<int>(ops_[i]) <= static_cast<int>(ops_[i - 1]))
      throw ConfigError("operation space must list distinct ops in registry order");
}

int OpSpace::index_of(OpKind kind) const {
  for (std::size_t i = 0; i < ops_.size(); ++i)
    if (ops_[i] == kind) return static_cast<int>(i);
  return -1;
}

Eigen::VectorXd AlphaTable::probabilities(std::size_t edge) const {
  const EdgeAlpha& a = edges.at(edge);
  if (a.frozen) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(a.logits.value.cols());
    p(*a.frozen) = 1.0;
    return p;
  }
  return op_probabilities(a.logits.value);
}

double AlphaTable::edge_entropy(std::size_t edge) const {
  const EdgeAlpha& a = edges.at(edge);
  return a.frozen ? 0.0 : sagnas::edge_entropy(a.logits.value);
}

double node_entropy(const CellTopology& topology, const AlphaTable& alphas, int j) {
  if (!topology.is_intermediate(j)) throw std::invalid_argument("node_entropy: node " + std::to_string(j) + " is not intermediate");
  const auto inputs = topology.input_edges(j);
  if (inputs.empty()) throw std::invalid_argument("node_entropy: node has no inputs");
  double s = 0.0;
  for (int e : inputs) s += alphas.edge_entropy(static_cast<std::size_t>(e));
  return s / static_cast<double>(inputs.size());
}

double overall_entropy(const CellTopology& topology, const AlphaTable& alphas) {
  double s = 0.0;
  for (int j = 2; j < topology.node_count(); ++j) s += node_entropy(topology, alphas, j);
  return s / static_cast<double>(topology.intermediate_count());
}

Tensor mixed_edge_forward(EdgeAlpha& alpha, EdgeWeights& weights, const OpSpace& ops, const Tensor& h,
                          const GraphOperators& graph, ForwardMode mode) {
  if (static_cast<std::size_t>(alpha.logits.value.cols()) != ops.size() || weights.ops.size() != ops.size())
    throw std::invalid_argument("mixed_edge_forward: alpha/weights do not match the operation space");
  if (alpha.frozen) {
    const OpKind kind = ops[static_cast<std::size_t>(*alpha.frozen)];
    return op_forward(kind, weights.ops[static_cast<std::size_t>(*alpha.frozen)], h, graph, mode.train_weights);
  }
  Tensor probs = softmax_rows(h.tape().leaf(alpha.logits, mode.train_alpha));
  std::vector<Tensor> outs;
  std::vector<int> cols;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i] == OpKind::zero) continue;  // contributes exactly zero
    outs.push_back(op_forward(ops[i], weights.ops[i], h, graph, mode.train_weights));
    cols.push_back(static_cast<int>(i));
  }
  if (outs.empty()) return mul_scalar(h, 0.0);
  return weighted_sum(outs, probs, cols);
}

namespace {

std::string edge_tag(const CellEdge& e) { return std::to_string(e.src) + "-" + std::to_string(e.dst); }

OpParams empty_params(OpKind kind) {
  OpParams p;
  p.kind = kind;
  return p;
}

}  // namespace

EdgeWeights SupernetModel::fresh_edge(int cell, int edge, std::uint64_t seed) const {
  EdgeWeights w;
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    Rng rng(derive_seed(seed, "edge.weights", {static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(edge), i}));
    w.ops.push_back(init_params(ops_[i], shape_.hidden, rng));
  }
  return w;
}

EdgeAlpha SupernetModel::fresh_alpha(int edge, std::uint64_t seed) const {
  Rng rng(derive_seed(seed, "alpha", {static_cast<std::uint64_t>(edge)}));
  Matrix a(1, static_cast<Index>(ops_.size()));
  for (Index i = 0; i < a.cols(); ++i) a(0, i) = kAlphaJitter * standard_normal(rng);
  return EdgeAlpha{Parameter("alpha", std::move(a)), std::nullopt};
}

void SupernetModel::init_dense_parts(std::uint64_t seed) {
  const Index d = shape_.hidden;
  const Index width = static_cast<Index>(topology_.intermediate_count()) * d;
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    Rng rng(derive_seed(seed, "cell.output", {k}));
    cells_[k].output = Parameter("out.W", glorot_uniform(width, d, rng));
  }
  Rng rng(derive_seed(seed, "classifier"));
  classifier_ = Parameter("classifier.W", glorot_uniform(d, shape_.num_classes, rng));
  classifier_bias_ = Parameter("classifier.b", Matrix::Zero(1, shape_.num_classes));
}

SupernetModel::SupernetModel(CellTopology topology, OpSpace ops, ModelShape shape, std::uint64_t seed)
    : topology_(std::move(topology)), ops_(std::move(ops)), shape_(shape) {
  if (shape_.cells <= 0 || shape_.hidden <= 0 || shape_.feat_dim <= 0 || shape_.num_classes <= 0)
    throw std::invalid_argument("SupernetModel: invalid shape");
  const auto n_edges = topology_.edge_count();
  for (std::size_t e = 0; e < n_edges; ++e) alphas_.edges.push_back(fresh_alpha(static_cast<int>(e), seed));
  Rng rng(derive_seed(seed, "input"));
  input_ = Parameter("input.W", glorot_uniform(shape_.feat_dim, shape_.hidden, rng));
  cells_.resize(static_cast<std::size_t>(shape_.cells));
  for (int k = 0; k < shape_.cells; ++k)
    for (std::size_t e = 0; e < n_edges; ++e) cells_[k].edges.push_back(fresh_edge(k, static_cast<int>(e), seed));
  init_dense_parts(seed);
}

SupernetModel SupernetModel::from_architecture(const DerivedArchitecture& arch, Index feat_dim, int num_classes,
                                               std::uint64_t seed) {
  SupernetModel m;
  m.topology_ = arch.topology;
  m.shape_ = ModelShape{feat_dim, arch.hidden, num_classes, arch.cells, arch.node_norm};
  if (m.shape_.cells <= 0 || m.shape_.hidden <= 0 || feat_dim <= 0 || num_classes <= 0)
    throw std::invalid_argument("from_architecture: invalid shape");
  const auto n_edges = m.topology_.edge_count();
  if (arch.ops.size() != n_edges) throw std::invalid_argument("from_architecture: op count does not match edges");
  for (std::size_t e = 0; e < n_edges; ++e) {
    EdgeAlpha a{Parameter("alpha", Matrix::Zero(1, static_cast<Index>(m.ops_.size()))),
                m.ops_.index_of(arch.ops[e])};
    m.alphas_.edges.push_back(std::move(a));
  }
  Rng rng(derive_seed(seed, "input"));
  m.input_ = Parameter("input.W", glorot_uniform(feat_dim, m.shape_.hidden, rng));
  m.cells_.resize(static_cast<std::size_t>(m.shape_.cells));
  for (int k = 0; k < m.shape_.cells; ++k) {
    for (std::size_t e = 0; e < n_edges; ++e) {
      EdgeWeights w;
      for (std::size_t i = 0; i < m.ops_.size(); ++i) {
        if (m.ops_[i] == arch.ops[e]) {
          Rng r(derive_seed(seed, "edge.weights", {static_cast<std::uint64_t>(k), e, i}));
          w.ops.push_back(init_params(m.ops_[i], m.shape_.hidden, r));
        } else {
          w.ops.push_back(empty_params(m.ops_[i]));
        }
      }
      m.cells_[k].edges.push_back(std::move(w));
    }
  }
  m.init_dense_parts(seed);
  return m;
}

Tensor SupernetModel::cell_forward(int cell, const Tensor& in0, const Tensor& in1, const GraphOperators& graph,
                                   ForwardMode mode) {
  if (in0.cols() != shape_.hidden || in1.cols() != shape_.hidden || in0.rows() != in1.rows())
    throw std::invalid_argument("cell_forward: inputs must both be n×hidden");
  CellWeights& cw = cells_.at(static_cast<std::size_t>(cell));
  std::vector<Tensor> nodes{in0, in1};
  const auto edges = topology_.edges();
  std::size_t e = 0;
  for (int j = 2; j < topology_.node_count(); ++j) {
    Tensor acc;
    for (int src : topology_.sources(j)) {
      EdgeAlpha& alpha = alphas_.edges[e];
      const bool pruned = alpha.frozen && ops_[static_cast<std::size_t>(*alpha.frozen)] == OpKind::zero;
      if (!pruned) {
        Tensor out = mixed_edge_forward(alpha, cw.edges[e], ops_, nodes[static_cast<std::size_t>(src)], graph, mode);
        acc = acc.valid() ? add(acc, out) : out;
      }
      ++e;
    }
    if (!acc.valid()) acc = in0.tape().constant(Matrix::Zero(in0.rows(), shape_.hidden));
    else if (shape_.node_norm == NodeNorm::layer) acc = layer_norm_rows(acc);
    nodes.push_back(acc);
  }
  std::vector<Tensor> inner(nodes.begin() + 2, nodes.end());
  Tensor cat = inner.size() == 1 ? inner.front() : concat_cols(inner);
  return matmul(cat, in0.tape().leaf(cw.output, mode.train_weights));
}

Tensor SupernetModel::forward(Tape& tape, const Matrix& features, const GraphOperators& graph, ForwardMode mode) {
  if (features.cols() != shape_.feat_dim) throw std::invalid_argument("forward: feature width mismatch");
  Tensor h0 = elu(matmul(tape.constant(features), tape.leaf(input_, mode.train_weights)));
  Tensor prev2 = h0, prev1 = h0;
  for (int k = 0; k < shape_.cells; ++k) {
    Tensor out = elu(cell_forward(k, prev2, prev1, graph, mode));
    prev2 = prev1;
    prev1 = out;
  }
  return add_row_bias(matmul(prev1, tape.leaf(classifier_, mode.train_weights)),
                      tape.leaf(classifier_bias_, mode.train_weights));
}

Tensor SupernetModel::entropy_regularizer(Tape& tape, bool train_alpha) {
  Tensor total;
  const double inv_p = 1.0 / static_cast<double>(topology_.intermediate_count());
  for (int j = 2; j < topology_.node_count(); ++j) {
    const auto inputs = topology_.input_edges(j);
    const double w = inv_p / static_cast<double>(inputs.size());
    for (int e : inputs) {
      EdgeAlpha& a = alphas_.edges[static_cast<std::size_t>(e)];
      if (a.frozen) continue;
      Tensor term = mul_scalar(softmax_entropy(tape.leaf(a.logits, train_alpha)), w);
      total = total.valid() ? add(total, term) : term;
    }
  }
  return total.valid() ? total : tape.constant(Matrix::Zero(1, 1));
}

std::vector<Parameter*> SupernetModel::weight_parameters() {
  std::vector<Parameter*> out{&input_};
  for (auto& c : cells_) {
    for (auto& e : c.edges)
      for (auto& op : e.ops)
        for (auto& t : op.tensors) out.push_back(&t);
    out.push_back(&c.output);
  }
  out.push_back(&classifier_);
  out.push_back(&classifier_bias_);
  return out;
}

std::vector<Parameter*> SupernetModel::alpha_parameters() {
  std::vector<Parameter*> out;
  for (auto& a : alphas_.edges)
    if (a.trainable()) out.push_back(&a.logits);
  return out;
}

namespace {

int argmax_first(const Eigen::VectorXd& p) {
  int best = 0;
  for (Index i = 1; i < p.size(); ++i)
    if (p(i) > p(best)) best = static_cast<int>(i);
  return best;
}

}  // namespace

void SupernetModel::freeze_all() {
  for (std::size_t e = 0; e < alphas_.edges.size(); ++e)
    if (alphas_.edges[e].trainable()) alphas_.edges[e].frozen = argmax_first(alphas_.probabilities(e));
}

SupernetModel SupernetModel::split(int j, std::uint64_t seed) const {
  const SplitResult r = split_node(topology_, j);
  SupernetModel m;
  m.topology_ = r.topology;
  m.ops_ = ops_;
  m.shape_ = shape_;
  m.input_ = input_;
  m.cells_.resize(cells_.size());
  const auto n_edges = r.edge_origin.size();
  for (std::size_t e = 0; e < n_edges; ++e) {
    const int origin = r.edge_origin[e];
    if (origin >= 0) {
      EdgeAlpha a = alphas_.edges[static_cast<std::size_t>(origin)];
      if (!a.frozen) a.frozen = argmax_first(alphas_.probabilities(static_cast<std::size_t>(origin)));
      m.alphas_.edges.push_back(std::move(a));
    } else {
      m.alphas_.edges.push_back(m.fresh_alpha(static_cast<int>(e), seed));
    }
  }
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    for (std::size_t e = 0; e < n_edges; ++e) {
      const int origin = r.edge_origin[e];
      m.cells_[k].edges.push_back(origin >= 0 ? cells_[k].edges[static_cast<std::size_t>(origin)]
                                              : m.fresh_edge(static_cast<int>(k), static_cast<int>(e), seed));
    }
  }
  m.init_dense_parts(seed);
  return m;
}

std::vector<sagg::NamedTensor> SupernetModel::state_dict() const {
  std::vector<sagg::NamedTensor> out;
  Matrix registry(1, static_cast<Index>(ops_.size()));
  for (std::size_t i = 0; i < ops_.size(); ++i) registry(0, static_cast<Index>(i)) = static_cast<double>(ops_[i]);
  out.push_back({"ops", registry});
  out.push_back({"input.W", input_.value});
  const auto edges = topology_.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out.push_back({"alpha." + edge_tag(edges[e]), alphas_.edges[e].logits.value});
    if (alphas_.edges[e].frozen) out.push_back({"frozen." + edge_tag(edges[e]), Matrix::Constant(1, 1, *alphas_.edges[e].frozen)});
  }
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    const std::string cell = "cell" + std::to_string(k) + ".";
    for (std::size_t e = 0; e < edges.size(); ++e)
      for (const auto& op : cells_[k].edges[e].ops)
        for (const auto& t : op.tensors)
          out.push_back({cell + "edge" + edge_tag(edges[e]) + "." + std::string(op_name(op.kind)) + "." + t.name, t.value});
    out.push_back({cell + "out.W", cells_[k].output.value});
  }
  out.push_back({"classifier.W", classifier_.value});
  out.push_back({"classifier.b", classifier_bias_.value});
  return out;
}

void SupernetModel::load_state_dict(const std::vector<sagg::NamedTensor>& tensors, bool strict) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;
  auto assign = [&](const std::string& name, Matrix& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      if (strict) throw DataError("checkpoint lacks tensor '" + name + "'");
      return false;
    }
    if (it->second->rows() != dst.rows() || it->second->cols() != dst.cols())
      throw DataError("checkpoint tensor '" + name + "' has the wrong shape");
    dst = *it->second;
    return true;
  };
  if (strict) {
    Matrix registry(1, static_cast<Index>(ops_.size()));
    assign("ops", registry);
    for (std::size_t i = 0; i < ops_.size(); ++i)
      if (registry(0, static_cast<Index>(i)) != static_cast<double>(ops_[i]))
        throw DataError("checkpoint operation space differs from the model's");
  }
  assign("input.W", input_.value);
  const auto edges = topology_.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!strict && alphas_.edges[e].frozen) continue;
    assign("alpha." + edge_tag(edges[e]), alphas_.edges[e].logits.value);
    Matrix fr(1, 1);
    auto it = by_name.find("frozen." + edge_tag(edges[e]));
    if (it != by_name.end()) {
      assign(it->first, fr);
      alphas_.edges[e].frozen = static_cast<int>(fr(0, 0));
    } else if (strict) {
      alphas_.edges[e].frozen.reset();
    }
  }
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    const std::string cell = "cell" + std::to_string(k) + ".";
    for (std::size_t e = 0; e < edges.size(); ++e)
      for (auto& op : cells_[k].edges[e].ops)
        for (auto& t : op.tensors)
          assign(cell + "edge" + edge_tag(edges[e]) + "." + std::string(op_name(op.kind)) + "." + t.name, t.value);
    assign(cell + "out.W", cells_[k].output.value);
  }
  assign("classifier.W", classifier_.value);
  assign("classifier.b", classifier_bias_.value);
  for (Parameter* p : weight_parameters()) p->zero_grad();
  for (auto& a : alphas_.edges) a.logits.zero_grad();
}

DerivedArchitecture discretize(const SupernetModel& model) {
  const auto& topo = model.topology();
  DerivedArchitecture arch;
  arch.topology = topo;
  arch.cells = model.shape().cells;
  arch.hidden = model.shape().hidden;
  arch.node_norm = model.shape().node_norm;
  for (std::size_t e = 0; e < topo.edge_count(); ++e) {
    const auto& a = model.alphas().edges[e];
    const int choice = a.frozen ? *a.frozen : argmax_first(model.alphas().probabilities(e));
    arch.ops.push_back(model.ops()[static_cast<std::size_t>(choice)]);
  }
  for (int j = 2; j < topo.node_count(); ++j) {
    bool live = false;
    for (int e : topo.input_edges(j)) live = live || !arch.pruned(static_cast<std::size_t>(e));
    if (!live) throw ArchitectureError("discretize: every input edge of node " + std::to_string(j) + " chose 'zero'");
  }
  return arch;
}

}  // namespace sagnas
