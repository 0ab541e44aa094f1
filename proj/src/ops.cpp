#include "sagnas/ops.hpp"

#include "sagnas/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sagnas {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::gcn: return "gcn";
    case OpKind::sage_mean: return "sage_mean";
    case OpKind::sage_sum: return "sage_sum";
    case OpKind::sage_max: return "sage_max";
    case OpKind::gin: return "gin";
    case OpKind::gat_1: return "gat_1";
    case OpKind::appnp: return "appnp";
    case OpKind::skip: return "skip";
    case OpKind::zero: return "zero";
  }
  throw std::invalid_argument("unknown OpKind");
}

OpKind parse_op(std::string_view name) {
  for (OpKind k : kOpRegistry)
    if (op_name(k) == name) return k;
  throw ConfigError("unknown operation '" + std::string(name) + "'");
}

bool is_parametric(OpKind kind) {
  return kind != OpKind::skip && kind != OpKind::zero && kind != OpKind::appnp;
}

Matrix glorot_uniform(Index rows, Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
  return m;
}

OpParams init_params(OpKind kind, Index hidden, Rng& rng) {
  if (hidden <= 0) throw std::invalid_argument("init_params: hidden width must be positive");
  OpParams p;
  p.kind = kind;
  p.initialized = true;
  auto square = [&](const char* name) { p.tensors.emplace_back(name, glorot_uniform(hidden, hidden, rng)); };
  switch (kind) {
    case OpKind::gcn:
      square("W");
      break;
    case OpKind::sage_mean:
    case OpKind::sage_sum:
    case OpKind::sage_max:
      square("W_self");
      square("W_neigh");
      break;
    case OpKind::gin:
      square("W1");
      square("W2");
      break;
    case OpKind::gat_1:
      square("W");
      p.tensors.emplace_back("a_src", glorot_uniform(hidden, 1, rng));
      p.tensors.emplace_back("a_dst", glorot_uniform(hidden, 1, rng));
      break;
    case OpKind::appnp:
    case OpKind::skip:
    case OpKind::zero:
      break;
  }
  return p;
}

Tensor op_forward(OpKind kind, OpParams& params, const Tensor& h, const GraphOperators& graph, bool train_weights) {
  if (!params.initialized || params.kind != kind)
    throw std::invalid_argument("op_forward: parameters for " + std::string(op_name(kind)) + " not initialized");
  if (h.rows() != graph.normalized.rows())
    throw std::invalid_argument("op_forward: H has " + std::to_string(h.rows()) + " rows for a graph of " +
                                std::to_string(graph.normalized.rows()) + " nodes");
  Tape& tape = h.tape();
  auto w = [&](std::size_t i) {
    Parameter& p = params.tensors.at(i);
    if (p.value.rows() != h.cols()) throw std::invalid_argument("op_forward: parameter " + p.name + " has wrong width");
    return tape.leaf(p, train_weights);
  };
  switch (kind) {
    case OpKind::gcn:
      return matmul(spmm(graph.normalized, h), w(0));
    case OpKind::sage_mean:
      return matmul(h, w(0)) + matmul(spmm(graph.mean, h), w(1));
    case OpKind::sage_sum:
      return matmul(h, w(0)) + matmul(spmm(graph.adjacency, h), w(1));
    case OpKind::sage_max:
      return matmul(h, w(0)) + matmul(row_max_pool_over_neighbors(graph.adjacency, h), w(1));
    case OpKind::gin:
      // (1 + eps) H + A H with eps fixed at 0, then a one-hidden-layer MLP.
      return matmul(relu(matmul(h + spmm(graph.adjacency, h), w(0))), w(1));
    case OpKind::gat_1: {
      Tensor z = matmul(h, w(0));
      return attention_aggregate(graph.normalized, z, matmul(z, w(1)), matmul(z, w(2)), kGatSlope);
    }
    case OpKind::appnp: {
      static const char tag = 0;  // weightless, so one result per input serves every edge
      return tape.memoize(&tag, h, [&] {
        Tensor teleport = h * kAppnpTeleport;
        Tensor z = h;
        for (int step = 0; step < kAppnpSteps; ++step) z = spmm(graph.normalized, z) * (1.0 - kAppnpTeleport) + teleport;
        return z;
      });
    }
    case OpKind::skip:
      return h;
    case OpKind::zero:
      return tape.constant(Matrix::Zero(h.rows(), h.cols()));
  }
  throw std::invalid_argument("op_forward: unknown kind");
}

}  // namespace sagnas
