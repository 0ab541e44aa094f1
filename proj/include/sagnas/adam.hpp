#pragma once

#include "sagnas/autodiff.hpp"

#include <span>
#include <vector>

namespace sagnas {

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled (AdamW-style) decay applied as p -= lr * weight_decay * p.
  double weight_decay = 0.0;
};

/// Moments are aligned with the parameter list handed to adam_step; the list must
/// keep the same order and shapes for the lifetime of the state.
struct AdamState {
  AdamOptions options;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  long step = 0;

  explicit AdamState(AdamOptions opts = {}) : options(opts) {}
};

/// One bias-corrected Adam update using each parameter's accumulated grad.
void adam_step(std::span<Parameter* const> params, AdamState& state);

void zero_grads(std::span<Parameter* const> params);

}  // namespace sagnas
