#include "sagnas/autodiff.hpp"

#include "sagnas/errors.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace sagnas {

const Matrix& Tensor::value() const {
  if (tape_ == nullptr) throw std::logic_error("empty tensor handle");
  return tape_->value(id_);
}

bool Tensor::requires_grad() const { return tape_ != nullptr && tape_->requires_grad(id_); }

void Tape::check_live() const {
  if (consumed_) throw std::logic_error("tape already consumed by backward()");
}

const Matrix& Tape::value(int id) const {
  check_live();
  return nodes_.at(static_cast<std::size_t>(id)).value;
}

Tensor Tape::constant(Matrix value) {
  check_live();
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

Tensor Tape::leaf(Parameter& p, bool requires_grad) {
  check_live();
  Node n;
  n.value = p.value;
  n.requires_grad = requires_grad;
  n.param = requires_grad ? &p : nullptr;
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

Tensor Tape::record(std::string_view op, Matrix value, std::initializer_list<Tensor> inputs, BackwardFn fn) {
  return record(op, std::move(value), std::span<const Tensor>(inputs.begin(), inputs.size()), std::move(fn));
}

Tensor Tape::record(std::string_view op, Matrix value, std::span<const Tensor> inputs, BackwardFn fn) {
  check_live();
  if (!value.allFinite()) throw NumericalError("non-finite value produced by " + std::string(op));
  Node n;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    if (&in.tape() != this) throw std::logic_error(std::string(op) + ": input recorded on a different tape");
    n.requires_grad = n.requires_grad || requires_grad(in.id());
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(const Tensor& t, const Matrix& contribution) {
  Node& n = nodes_[static_cast<std::size_t>(t.id())];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = contribution;
    n.has_grad = true;
  } else {
    n.grad += contribution;
  }
}

void Tape::accumulate(const Tensor& t, Matrix&& contribution) {
  Node& n = nodes_[static_cast<std::size_t>(t.id())];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = std::move(contribution);
    n.has_grad = true;
  } else {
    n.grad += contribution;
  }
}

void Tape::backward(const Tensor& loss) {
  check_live();
  if (&loss.tape() != this) throw std::logic_error("loss belongs to another tape");
  const Node& root = nodes_.at(static_cast<std::size_t>(loss.id()));
  if (root.value.rows() != 1 || root.value.cols() != 1) throw std::invalid_argument("backward() needs a scalar loss");
  if (root.requires_grad) {
    accumulate(loss, Matrix::Ones(1, 1));
    for (int i = loss.id(); i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.has_grad) continue;
      if (n.backward) n.backward(*this, n.grad);
      if (n.param != nullptr) n.param->grad += n.grad;
    }
  }
  nodes_.clear();
  memo_.clear();
  consumed_ = true;
}

namespace {

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": " + what);
}

std::string shape(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-major accumulation keeps the inner loop contiguous over the feature width.
SparseMatrix att_t(const SparseMatrix& a) { return SparseMatrix(a.transpose()); }

Matrix sparse_times(const SparseMatrix& s, const Matrix& x) {
  const RowMatrix xr = x;
  RowMatrix out = RowMatrix::Zero(s.rows(), x.cols());
  for (Index v = 0; v < s.rows(); ++v)
    for (SparseMatrix::InnerIterator it(s, v); it; ++it) out.row(v).noalias() += it.value() * xr.row(it.col());
  return Matrix(out);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul", "shape mismatch " + shape(a) + " * " + shape(b));
  Matrix out = a.value() * b.value();
  return a.tape().record("matmul", std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, Matrix(g * b.value().transpose()));
    if (b.requires_grad()) t.accumulate(b, Matrix(a.value().transpose() * g));
  });
}

Tensor spmm(const SparseOperator& s, const Tensor& x) {
  require(s.forward.cols() == x.rows(), "spmm", "sparse cols do not match " + shape(x));
  const SparseOperator* sp = &s;
  return x.tape().memoize(sp, x, [&] {
    return x.tape().record("spmm", sparse_times(sp->forward, x.value()), {x},
                           [sp, x](Tape& t, const Matrix& g) { t.accumulate(x, sparse_times(sp->transpose, g)); });
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add", "shape mismatch " + shape(a) + " + " + shape(b));
  Matrix out = a.value() + b.value();
  return a.tape().record("add", std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul", "shape mismatch " + shape(a) + " .* " + shape(b));
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape().record("mul", std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, Matrix(g.cwiseProduct(b.value())));
    if (b.requires_grad()) t.accumulate(b, Matrix(g.cwiseProduct(a.value())));
  });
}

Tensor mul_scalar(const Tensor& a, double c) {
  Matrix out = a.value() * c;
  return a.tape().record("mul_scalar", std::move(out), {a},
                         [a, c](Tape& t, const Matrix& g) { t.accumulate(a, Matrix(g * c)); });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_row_bias", "bias " + shape(bias) + " for " + shape(a));
  Matrix out = a.value().rowwise() + bias.value().row(0);
  return a.tape().record("add_row_bias", std::move(out), {a, bias}, [a, bias](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (bias.requires_grad()) t.accumulate(bias, Matrix(g.colwise().sum()));
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols", "row mismatch " + shape(p));
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    offsets.push_back(at);
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Tensor> ins(parts.begin(), parts.end());
  return parts.front().tape().record("concat_cols", std::move(out), parts,
                                     [ins, offsets](Tape& t, const Matrix& g) {
                                       for (std::size_t k = 0; k < ins.size(); ++k)
                                         if (ins[k].requires_grad())
                                           t.accumulate(ins[k], Matrix(g.middleCols(offsets[k], ins[k].cols())));
                                     });
}

Tensor relu(const Tensor& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape().record("relu", std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix((a.value().array() > 0.0).cast<double>() * g.array()));
  });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  return a.tape().record("leaky_relu", std::move(out), {a}, [a, slope](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix((a.value().array() > 0.0).select(g.array(), slope * g.array())));
  });
}

Tensor elu(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
  return a.tape().record("elu", std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix((a.value().array() > 0.0).select(g.array(), a.value().array().exp() * g.array())));
  });
}

Tensor softmax_rows(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return a.tape().record("softmax_rows", std::move(out), {a}, [a, id = a.tape().size()](Tape& t, const Matrix& g) {
    const Matrix& p = t.value(static_cast<int>(id));
    Matrix dx = p.cwiseProduct(g);
    const Eigen::VectorXd s = dx.rowwise().sum();
    dx -= p.cwiseProduct(s.replicate(1, p.cols()));
    t.accumulate(a, std::move(dx));
  });
}

Tensor layer_norm_rows(const Tensor& a, double eps) {
  const Matrix& x = a.value();
  const Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  const Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(x.cols())) + eps).rsqrt().matrix();
  Matrix out = inv_std.asDiagonal() * centered;
  return a.tape().record("layer_norm_rows", std::move(out), {a},
                         [a, inv_std, id = a.tape().size()](Tape& t, const Matrix& g) {
                           const Matrix& y = t.value(static_cast<int>(id));
                           const double n = static_cast<double>(y.cols());
                           const Eigen::VectorXd g_mean = g.rowwise().sum() / n;
                           const Eigen::VectorXd gy_mean = g.cwiseProduct(y).rowwise().sum() / n;
                           Matrix dx = g.colwise() - g_mean;
                           dx -= gy_mean.asDiagonal() * y;
                           t.accumulate(a, Matrix(inv_std.asDiagonal() * dx));
                         });
}

Tensor row_max_pool_over_neighbors(const SparseOperator& s, const Tensor& x) {
  const SparseMatrix& sp = s.forward;
  require(sp.cols() == x.rows(), "row_max_pool_over_neighbors", "sparse cols do not match " + shape(x));
  // Keyed on the transpose member so it never collides with spmm's key for the same operator.
  return x.tape().memoize(&s.transpose, x, [&] {
    const RowMatrix xv = x.value();
    const Index n = sp.rows(), d = xv.cols();
    RowMatrix out = RowMatrix::Zero(n, d);
    auto arg = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(n * d), -1);
    for (Index v = 0; v < n; ++v) {
      Index* best = arg->data() + v * d;
      double* o = out.row(v).data();
      for (SparseMatrix::InnerIterator it(sp, v); it; ++it) {
        const Index u = it.col();
        const double* xu = xv.row(u).data();
        for (Index c = 0; c < d; ++c) {
          // Columns arrive ascending, so strict '>' keeps the lowest index on ties.
          if (best[c] < 0 || xu[c] > o[c]) {
            best[c] = u;
            o[c] = xu[c];
          }
        }
      }
    }
    return x.tape().record("row_max_pool_over_neighbors", Matrix(out), {x}, [x, arg, n, d](Tape& t, const Matrix& g) {
      Matrix dx = Matrix::Zero(x.rows(), x.cols());
      for (Index c = 0; c < d; ++c)
        for (Index v = 0; v < n; ++v)
          if (const Index u = (*arg)[static_cast<std::size_t>(v * d + c)]; u >= 0) dx(u, c) += g(v, c);
      t.accumulate(x, std::move(dx));
    });
  });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record("sum", std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix(Matrix::Constant(a.rows(), a.cols(), g(0, 0))));
  });
}

Tensor weighted_sum(std::span<const Tensor> xs, const Tensor& weights, std::span<const int> cols) {
  require(!xs.empty() && xs.size() == cols.size(), "weighted_sum", "needs one column per input");
  require(weights.rows() == 1, "weighted_sum", "weights must be a row vector");
  const Matrix& w = weights.value();
  Matrix out = Matrix::Zero(xs.front().rows(), xs.front().cols());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    require(xs[k].rows() == out.rows() && xs[k].cols() == out.cols(), "weighted_sum", "shape mismatch " + shape(xs[k]));
    require(cols[k] >= 0 && cols[k] < w.cols(), "weighted_sum", "weight column out of range");
    out += w(0, cols[k]) * xs[k].value();
  }
  std::vector<Tensor> inputs(xs.begin(), xs.end());
  std::vector<int> idx(cols.begin(), cols.end());
  std::vector<Tensor> all = inputs;
  all.push_back(weights);
  return weights.tape().record("weighted_sum", std::move(out), all, [inputs, idx, weights](Tape& t, const Matrix& g) {
    const Matrix& w = weights.value();
    Matrix dw = Matrix::Zero(1, w.cols());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (inputs[k].requires_grad()) t.accumulate(inputs[k], Matrix(w(0, idx[k]) * g));
      if (weights.requires_grad()) dw(0, idx[k]) += g.cwiseProduct(inputs[k].value()).sum();
    }
    t.accumulate(weights, std::move(dw));
  });
}

Tensor softmax_entropy(const Tensor& alpha) {
  require(alpha.rows() == 1, "softmax_entropy", "alpha must be a row vector");
  const Eigen::RowVectorXd a = alpha.value().row(0);
  Eigen::RowVectorXd p = (a.array() - a.maxCoeff()).exp();
  p /= p.sum();
  double h = 0.0;
  for (Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  Matrix out(1, 1);
  out(0, 0) = h;
  return alpha.tape().record("softmax_entropy", std::move(out), {alpha}, [alpha, p, h](Tape& t, const Matrix& g) {
    Matrix da(1, p.size());
    for (Index i = 0; i < p.size(); ++i) da(0, i) = p(i) > 0.0 ? -p(i) * (std::log(p(i)) + h) * g(0, 0) : 0.0;
    t.accumulate(alpha, std::move(da));
  });
}

SparseMatrix attention_coefficients(const SparseOperator& s, const Matrix& src, const Matrix& dst, double slope) {
  SparseMatrix att = s.forward;
  for (Index v = 0; v < att.rows(); ++v) {
    double m = -std::numeric_limits<double>::infinity();
    for (SparseMatrix::InnerIterator it(att, v); it; ++it) {
      const double e = dst(v, 0) + src(it.col(), 0);
      it.valueRef() = e > 0.0 ? e : slope * e;
      m = std::max(m, it.value());
    }
    double z = 0.0;
    for (SparseMatrix::InnerIterator it(att, v); it; ++it) {
      it.valueRef() = std::exp(it.value() - m);
      z += it.value();
    }
    for (SparseMatrix::InnerIterator it(att, v); it; ++it) it.valueRef() /= z;
  }
  return att;
}

Tensor attention_aggregate(const SparseOperator& s, const Tensor& z, const Tensor& src, const Tensor& dst, double slope) {
  const Index n = s.rows();
  require(z.rows() == n && src.rows() == n && dst.rows() == n && src.cols() == 1 && dst.cols() == 1,
          "attention_aggregate", "expects z n×d, src/dst n×1");
  auto att = std::make_shared<SparseMatrix>(attention_coefficients(s, src.value(), dst.value(), slope));
  Matrix out = sparse_times(*att, z.value());
  return z.tape().record("attention_aggregate", std::move(out), {z, src, dst},
                         [att, z, src, dst, slope](Tape& t, const Matrix& g) {
                           if (z.requires_grad()) t.accumulate(z, sparse_times(att_t(*att), g));
                           if (!src.requires_grad() && !dst.requires_grad()) return;
                           const RowMatrix zv = z.value();
                           const RowMatrix gr = g;
                           Matrix dsrc = Matrix::Zero(src.rows(), 1), ddst = Matrix::Zero(dst.rows(), 1);
                           const Matrix& sv = src.value();
                           const Matrix& dv = dst.value();
                           std::vector<double> datt;
                           for (Index v = 0; v < att->rows(); ++v) {
                             // d score = att ⊙ (d att − Σ att·d att)
                             datt.clear();
                             double dot = 0.0;
                             for (SparseMatrix::InnerIterator it(*att, v); it; ++it) {
                               datt.push_back(gr.row(v).dot(zv.row(it.col())));
                               dot += it.value() * datt.back();
                             }
                             std::size_t k = 0;
                             for (SparseMatrix::InnerIterator it(*att, v); it; ++it, ++k) {
                               const Index u = it.col();
                               const double pre = dv(v, 0) + sv(u, 0);
                               const double de = it.value() * (datt[k] - dot) * (pre > 0.0 ? 1.0 : slope);
                               ddst(v, 0) += de;
                               dsrc(u, 0) += de;
                             }
                           }
                           t.accumulate(src, std::move(dsrc));
                           t.accumulate(dst, std::move(ddst));
                         });
}

Tensor masked_cross_entropy(const Tensor& logits, std::span<const int> labels, std::span<const Index> rows) {
  if (rows.empty()) throw std::invalid_argument("masked_cross_entropy: empty mask");
  const Matrix& x = logits.value();
  require(static_cast<Index>(labels.size()) == x.rows(), "masked_cross_entropy", "one label per logits row required");
  auto probs = std::make_shared<Matrix>(static_cast<Index>(rows.size()), x.cols());
  double loss = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    require(r >= 0 && r < x.rows(), "masked_cross_entropy", "mask row out of range");
    const int y = labels[static_cast<std::size_t>(r)];
    require(y >= 0 && y < x.cols(), "masked_cross_entropy", "label out of range");
    const double m = x.row(r).maxCoeff();
    Eigen::RowVectorXd e = (x.row(r).array() - m).exp();
    const double z = e.sum();
    loss += std::log(z) + m - x(r, y);
    probs->row(static_cast<Index>(k)) = e / z;
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  Matrix out(1, 1);
  out(0, 0) = loss * inv;
  std::vector<Index> rs(rows.begin(), rows.end());
  std::vector<int> ys(labels.begin(), labels.end());
  return logits.tape().record("masked_cross_entropy", std::move(out), {logits},
                              [logits, probs, rs, ys, inv](Tape& t, const Matrix& g) {
                                Matrix dx = Matrix::Zero(logits.rows(), logits.cols());
                                for (std::size_t k = 0; k < rs.size(); ++k) {
                                  dx.row(rs[k]) += probs->row(static_cast<Index>(k)) * (g(0, 0) * inv);
                                  dx(rs[k], ys[static_cast<std::size_t>(rs[k])]) -= g(0, 0) * inv;
                                }
                                t.accumulate(logits, std::move(dx));
                              });
}

}  // namespace sagnas
