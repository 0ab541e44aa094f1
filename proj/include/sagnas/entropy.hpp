#pragma once

#include <Eigen/Core>

#include <cmath>

namespace sagnas {

/// softmax(alpha) as a column vector, computed with the max-shift for stability.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> op_probabilities(const Eigen::MatrixBase<Derived>& alpha) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p = alpha.derived().reshaped();
  p = (p.array() - p.maxCoeff()).exp();
  return p / p.sum();
}

/// -Σ p log p with 0·log 0 := 0.
template <typename Derived>
typename Derived::Scalar entropy_of(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar v = p.derived().reshaped()(i);
    if (v > Scalar(0)) h -= v * std::log(v);
  }
  return h;
}

/// Entropy of the operation distribution softmax(alpha) on one edge.
template <typename Derived>
typename Derived::Scalar edge_entropy(const Eigen::MatrixBase<Derived>& alpha) {
  return entropy_of(op_probabilities(alpha));
}

}  // namespace sagnas
