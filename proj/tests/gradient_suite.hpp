#pragma once

#include "sagnas/gradcheck.hpp"
#include "sagnas/supernet.hpp"
#include "test_support.hpp"

#include <vector>

namespace sagnas::testing {

inline constexpr double kGradTolerance = 1e-4;
// Probe step and the magnitude below which errors are judged in absolute terms.
inline constexpr double kProbeStep = 1e-5;
inline constexpr double kGradFloor = 1e-6;

/// Linear read-out of an n×d tensor with fixed random coefficients so every entry matters.
inline Tensor probe_loss(const Tensor& out, const Matrix& coeff) {
  return sum(mul(out, out.tape().constant(coeff)));
}

/// Gradient check of one operation on a small random graph; checks the input and all weights.
inline GradientReport op_gradient_report(OpKind kind, std::uint64_t seed, Index n = 8, Index d = 4) {
  Graph g = random_graph(n, 0.35, d, 2, seed);
  GraphOperators ops = GraphOperators::build(g);
  Rng rng(derive_seed(seed, "grad.op"));
  OpParams params = init_params(kind, d, rng);
  Parameter h("H", random_matrix(n, d, rng));
  const Matrix coeff = random_matrix(n, d, rng);

  std::vector<Parameter*> all{&h};
  for (auto& p : params.tensors) all.push_back(&p);
  LossFunction f = [&](Tape& tape, std::span<Parameter* const>) {
    return probe_loss(op_forward(kind, params, tape.leaf(h), ops, true), coeff);
  };
  return gradient_check(f, all, kProbeStep, kGradFloor);
}

/// Gradient check of a softmax-mixed edge over the full registry: α, every op weight and the input.
inline GradientReport mixed_edge_gradient_report(std::uint64_t seed, Index n = 8, Index d = 4) {
  Graph g = random_graph(n, 0.35, d, 2, seed);
  GraphOperators graph = GraphOperators::build(g);
  Rng rng(derive_seed(seed, "grad.mixed"));
  OpSpace space;
  EdgeAlpha alpha{Parameter("alpha", random_matrix(1, static_cast<Index>(space.size()), rng)), std::nullopt};
  EdgeWeights weights;
  for (OpKind k : space.ops()) weights.ops.push_back(init_params(k, d, rng));
  Parameter h("H", random_matrix(n, d, rng));
  const Matrix coeff = random_matrix(n, d, rng);

  std::vector<Parameter*> all{&h, &alpha.logits};
  for (auto& op : weights.ops)
    for (auto& p : op.tensors) all.push_back(&p);
  LossFunction f = [&](Tape& tape, std::span<Parameter* const>) {
    return probe_loss(mixed_edge_forward(alpha, weights, space, tape.leaf(h), graph, {true, true}), coeff);
  };
  return gradient_check(f, all, kProbeStep, kGradFloor);
}

}  // namespace sagnas::testing
