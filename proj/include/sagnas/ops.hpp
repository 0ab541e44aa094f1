#pragma once

#include "sagnas/autodiff.hpp"
#include "sagnas/rng.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace sagnas {

/// Candidate aggregation operations. The enumerator order is the registry order and
/// must stay stable: alpha vectors and entropy reports index into it.
enum class OpKind : int { gcn = 0, sage_mean, sage_sum, sage_max, gin, gat_1, appnp, skip, zero };

inline constexpr std::array<OpKind, 9> kOpRegistry = {OpKind::gcn,  OpKind::sage_mean, OpKind::sage_sum,
                                                      OpKind::sage_max, OpKind::gin,   OpKind::gat_1,
                                                      OpKind::appnp, OpKind::skip,     OpKind::zero};

inline constexpr double kGatSlope = 0.2;
inline constexpr double kAppnpTeleport = 0.1;
inline constexpr int kAppnpSteps = 2;

std::string_view op_name(OpKind kind);
/// Throws ConfigError for unknown names.
OpKind parse_op(std::string_view name);
bool is_parametric(OpKind kind);

/// Learnable tensors of one operation instance. Empty for skip/zero/appnp.
struct OpParams {
  OpKind kind = OpKind::zero;
  bool initialized = false;
  std::vector<Parameter> tensors;
};

/// Glorot-uniform initialization for the given hidden width.
OpParams init_params(OpKind kind, Index hidden, Rng& rng);

/// Maps H (n×d) to n×d. Parameters become tape leaves that require grad iff train_weights.
Tensor op_forward(OpKind kind, OpParams& params, const Tensor& h, const GraphOperators& graph, bool train_weights);

/// Uniform(-b, b) with b = sqrt(6 / (rows + cols)).
Matrix glorot_uniform(Index rows, Index cols, Rng& rng);

}  // namespace sagnas
