#pragma once

// Reverse-mode autodiff over dense Eigen matrices.
//
// A Tape records primitive applications in creation order, which is a valid
// topological order, so backward() is a single reverse sweep. Sparse operands
// (graph operators) are always constants. Parameters live outside the tape and
// receive accumulated gradients when backward() runs.

#include "sagnas/graph.hpp"

#include <deque>
#include <functional>
#include <map>
#include <utility>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sagnas {

/// A trainable matrix with its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the tape is consumed.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// Receives the output gradient; pushes contributions to inputs via accumulate().
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  /// Records a parameter as a leaf. With requires_grad=false it behaves as a constant
  /// and its value can never change through this tape.
  Tensor leaf(Parameter& p, bool requires_grad = true);

  /// Records a primitive result. `fn` is stored only when some input requires grad.
  /// Throws NumericalError naming `op` when the value is not finite.
  Tensor record(std::string_view op, Matrix value, std::initializer_list<Tensor> inputs, BackwardFn fn);
  Tensor record(std::string_view op, Matrix value, std::span<const Tensor> inputs, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1, sweeps the tape once in reverse, adds leaf gradients
  /// into their Parameters, then clears the tape.
  void backward(const Tensor& loss);

  void accumulate(const Tensor& t, const Matrix& contribution);
  void accumulate(const Tensor& t, Matrix&& contribution);

  /// Tensor previously stored under (tag, input), or make() recorded and stored now.
  /// Lets a fixed operator applied to the same tensor be shared by every consumer.
  template <class Make>
  Tensor memoize(const void* tag, const Tensor& input, Make&& make) {
    const auto key = std::make_pair(tag, input.id());
    if (auto it = memo_.find(key); it != memo_.end()) return Tensor(this, it->second);
    Tensor t = make();
    memo_.emplace(key, t.id());
    return t;
  }

  const Matrix& value(int id) const;
  bool requires_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).requires_grad; }
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  void check_live() const;

  std::deque<Node> nodes_;
  std::map<std::pair<const void*, int>, int> memo_;
  bool consumed_ = false;
};

// Primitive suite. Every primitive checks shapes and throws std::invalid_argument on mismatch.

Tensor matmul(const Tensor& a, const Tensor& b);
/// S·X with S a constant sparse operator.
Tensor spmm(const SparseOperator& s, const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor mul_scalar(const Tensor& a, double c);
/// Adds a 1×cols row vector to every row.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor elu(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
/// Per-row standardization (x - mean) / sqrt(var + eps), no affine parameters.
Tensor layer_norm_rows(const Tensor& a, double eps = 1e-5);
/// Per row v and column c: max over the stored neighbours u of S(v,·) of x(u,c).
/// Rows with no neighbours give 0. Gradient goes to the argmax entry only, lowest index on ties.
Tensor row_max_pool_over_neighbors(const SparseOperator& s, const Tensor& x);
/// Sum of all entries as a 1×1 tensor.
Tensor sum(const Tensor& a);
/// Σ_k weights(0, cols[k]) · xs[k] with weights a 1×m row.
Tensor weighted_sum(std::span<const Tensor> xs, const Tensor& weights, std::span<const int> cols);
/// Shannon entropy (natural log) of softmax(alpha) for a 1×m row; 1×1 output.
Tensor softmax_entropy(const Tensor& alpha);
/// Single-head graph attention over the pattern of `s` (which must include the diagonal).
/// score(v,u) = leaky_relu(dst(v) + src(u), slope), normalized per row; out(v) = Σ_u att(v,u) z(u).
Tensor attention_aggregate(const SparseOperator& s, const Tensor& z, const Tensor& src, const Tensor& dst, double slope);
/// The attention coefficients attention_aggregate would use, as a sparse matrix with the pattern of `s`.
SparseMatrix attention_coefficients(const SparseOperator& s, const Matrix& src, const Matrix& dst, double slope);
/// Mean cross-entropy over `rows`; 1×1 output.
Tensor masked_cross_entropy(const Tensor& logits, std::span<const int> labels, std::span<const Index> rows);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator*(const Tensor& a, double c) { return mul_scalar(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return mul_scalar(a, c); }

}  // namespace sagnas
