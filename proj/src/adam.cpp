#include "sagnas/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace sagnas {

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (state.first_moment.empty() && state.step == 0) {
    for (const Parameter* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.first_moment.size() != params.size()) throw std::invalid_argument("adam_step: parameter list changed");
  ++state.step;
  const auto& o = state.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() || m.rows() != p.value.rows() ||
        m.cols() != p.value.cols())
      throw std::invalid_argument("adam_step: shape mismatch for " + p.name);
    m = o.beta1 * m + (1.0 - o.beta1) * p.grad;
    v = o.beta2 * v + (1.0 - o.beta2) * p.grad.cwiseAbs2();
    if (o.weight_decay != 0.0) p.value -= (o.lr * o.weight_decay) * p.value;
    p.value.array() -= o.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + o.eps);
  }
}

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace sagnas
