#include "sagnas/gradcheck.hpp"

#include "sagnas/errors.hpp"

#include <cmath>

namespace sagnas {
namespace {

double evaluate(const LossFunction& f, std::span<Parameter* const> params) {
  Tape tape;
  const double v = f(tape, params).value()(0, 0);
  if (!std::isfinite(v)) throw NumericalError("gradient_check: loss not finite at probe point");
  return v;
}

}  // namespace

GradientReport gradient_check(const LossFunction& f, std::span<Parameter* const> params, double h, double floor) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Tensor loss = f(tape, params);
    tape.backward(loss);
  }
  GradientReport report;
  for (Parameter* p : params) {
    const Matrix analytic = p->grad;
    for (Index r = 0; r < p->value.rows(); ++r) {
      for (Index c = 0; c < p->value.cols(); ++c) {
        const double x0 = p->value(r, c);
        p->value(r, c) = x0 + h;
        const double up = evaluate(f, params);
        p->value(r, c) = x0 - h;
        const double down = evaluate(f, params);
        p->value(r, c) = x0;
        const double numeric = (up - down) / (2.0 * h);
        const double abs_err = std::abs(analytic(r, c) - numeric);
        const double rel = abs_err / std::max({std::abs(analytic(r, c)), std::abs(numeric), floor});
        report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
        if (rel > report.max_relative_error) {
          report.max_relative_error = rel;
          report.worst_parameter = p->name;
          report.worst_row = r;
          report.worst_col = c;
        }
        ++report.entries_checked;
      }
    }
  }
  return report;
}

}  // namespace sagnas
