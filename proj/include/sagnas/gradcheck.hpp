#pragma once

#include "sagnas/autodiff.hpp"

#include <functional>
#include <span>
#include <string>

namespace sagnas {

struct GradientReport {
  /// max over entries of |tape − fd| / max(|tape|, |fd|, floor)
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::string worst_parameter;
  Index worst_row = -1;
  Index worst_col = -1;
  std::size_t entries_checked = 0;

  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

/// Builds a scalar loss on the given tape from the bound parameters.
using LossFunction = std::function<Tensor(Tape&, std::span<Parameter* const>)>;

/// Compares tape gradients with central differences of step `h`.
/// Throws NumericalError if f is not finite at a probe point.
GradientReport gradient_check(const LossFunction& f, std::span<Parameter* const> params, double h = 1e-5,
                              double floor = 1e-6);

}  // namespace sagnas
