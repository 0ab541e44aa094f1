#pragma once

#include <span>

namespace sagnas {

/// Weighted Kendall rank consistency between a subgraph sequence and the matching
/// sequence on the full graph. Each pair k < k' contributes a weight in [-1, 1]: the ratio
/// of the smaller to the larger accuracy change (1 when both are unchanged). The result is
/// Σw / Σ|w|, or 0 when every pair has weight 0.
///
/// Accuracies are compared in integer micro-units so that equal inputs give exactly equal
/// differences.
double weighted_kendall_tau(std::span<const double> subgraph, std::span<const double> full);

}  // namespace sagnas
