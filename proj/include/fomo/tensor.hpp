#ifndef FOMO_TENSOR_HPP
#define FOMO_TENSOR_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fomo/errors.hpp"

namespace fomo {

using Index = Eigen::Index;

/// Row-major dense matrix; rows are examples, columns are features.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Shape = std::vector<Index>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense tensor of rank 0, 1 or 2 with an optional gradient buffer.
///
/// Copies are shallow: two copies refer to the same storage, which is what
/// lets a Tape route gradients back into parameters owned by a model. Use
/// clone() for an independent deep copy. Rank-1 tensors are stored as a
/// single row and rank-0 tensors as a 1x1 matrix.
template <typename Scalar>
class Tensor {
 public:
  using MatrixType = Matrix<Scalar>;

  Tensor() = default;

  explicit Tensor(MatrixType value, bool requires_grad = false) : impl_(std::make_shared<Impl>()) {
    impl_->shape = Shape{value.rows(), value.cols()};
    impl_->value = std::move(value);
    impl_->requires_grad = requires_grad;
  }

  Tensor(Shape shape, MatrixType value, bool requires_grad = false)
      : impl_(std::make_shared<Impl>()) {
    if (shape.size() > 2) {
      throw DimensionError("tensors of rank " + std::to_string(shape.size()) +
                           " are not supported");
    }
    const Index n = std::accumulate(shape.begin(), shape.end(), Index{1},
                                    std::multiplies<Index>());
    if (n != value.size()) {
      throw DimensionError("shape " + shape_string(shape) + " does not match " +
                           std::to_string(value.size()) + " values");
    }
    impl_->shape = std::move(shape);
    impl_->value = std::move(value);
    impl_->requires_grad = requires_grad;
  }

  static Tensor scalar(Scalar v, bool requires_grad = false) {
    MatrixType m(1, 1);
    m(0, 0) = v;
    return Tensor(Shape{}, std::move(m), requires_grad);
  }

  static Tensor vector(const RowVector<Scalar>& v, bool requires_grad = false) {
    return Tensor(Shape{v.size()}, MatrixType(v), requires_grad);
  }

  static Tensor zeros(const Shape& shape, bool requires_grad = false) {
    const auto [r, c] = storage_dims(shape);
    return Tensor(shape, MatrixType::Zero(r, c), requires_grad);
  }

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  Index size() const { return impl_->value.size(); }
  Index rows() const { return impl_->value.rows(); }
  Index cols() const { return impl_->value.cols(); }

  const MatrixType& value() const { return impl_->value; }
  MatrixType& value() { return impl_->value; }
  Scalar item() const {
    if (size() != 1) {
      throw ContractError("item() on tensor of shape " + shape_string(shape()));
    }
    return impl_->value(0, 0);
  }

  bool requires_grad() const { return impl_->requires_grad; }
  bool has_grad() const { return impl_->grad.size() == impl_->value.size() && impl_->has_grad; }

  const MatrixType& grad() const {
    if (!has_grad()) throw ContractError("tensor has no gradient");
    return impl_->grad;
  }

  /// Gradient buffer, allocated as zeros on first access.
  MatrixType& grad_buffer() {
    if (!has_grad()) {
      impl_->grad = MatrixType::Zero(rows(), cols());
      impl_->has_grad = true;
    }
    return impl_->grad;
  }

  void zero_grad() {
    if (has_grad()) impl_->grad.setZero();
  }

  void clear_grad() {
    impl_->grad.resize(0, 0);
    impl_->has_grad = false;
  }

  Tensor clone(bool requires_grad) const {
    return Tensor(shape(), value(), requires_grad);
  }
  Tensor clone() const { return clone(requires_grad()); }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  static std::pair<Index, Index> storage_dims(const Shape& shape) {
    switch (shape.size()) {
      case 0: return {1, 1};
      case 1: return {1, shape[0]};
      case 2: return {shape[0], shape[1]};
      default:
        throw DimensionError("tensors of rank " + std::to_string(shape.size()) +
                             " are not supported");
    }
  }

 private:
  struct Impl {
    Shape shape;
    MatrixType value;
    MatrixType grad;
    bool has_grad = false;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

/// Records primitive operations so backward() can replay them in reverse.
template <typename Scalar>
class Tape {
 public:
  using MatrixType = Matrix<Scalar>;
  using BackwardRule = std::function<void(const MatrixType& upstream)>;

  void record(Tensor<Scalar> output, BackwardRule rule) {
    nodes_.push_back(Node{std::move(output), std::move(rule)});
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor<Scalar> output;
    BackwardRule rule;
  };
  std::vector<Node> nodes_;

  template <typename S>
  friend void backward(const Tensor<S>& loss, Tape<S>& tape);
};

/// Accumulates d(loss)/d(t) into the grad of every requires_grad leaf reachable
/// from loss. Intermediate buffers are reset on each call so that repeated
/// calls add the same gradient to the leaves again.
template <typename Scalar>
void backward(const Tensor<Scalar>& loss, Tape<Scalar>& tape) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) {
    throw ContractError("loss does not depend on any tensor that requires grad");
  }
  for (auto& node : tape.nodes_) {
    node.output.grad_buffer().setZero();
  }
  Tensor<Scalar> seed = loss;
  seed.grad_buffer()(0, 0) += Scalar(1);
  for (auto it = tape.nodes_.rbegin(); it != tape.nodes_.rend(); ++it) {
    it->rule(it->output.grad());
  }
}

namespace detail {

template <typename Scalar>
Tensor<Scalar> make_output(Shape shape, Matrix<Scalar> value,
                           std::initializer_list<const Tensor<Scalar>*> inputs) {
  bool track = false;
  for (const auto* t : inputs) track = track || t->requires_grad();
  return Tensor<Scalar>(std::move(shape), std::move(value), track);
}

template <typename Scalar>
void accumulate(Tensor<Scalar>& t, const Matrix<Scalar>& g) {
  if (t.requires_grad()) t.grad_buffer() += g;
}

}  // namespace detail

/// Row-wise log-softmax, stabilised by subtracting each row's maximum.
template <typename Derived>
Matrix<typename Derived::Scalar> log_softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    const Scalar lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

template <typename Derived>
Matrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  return log_softmax_rows(logits).array().exp().matrix();
}

// ---------------------------------------------------------------------------
// Differentiable primitives. Each records itself on the tape only when one of
// its inputs requires grad.
// ---------------------------------------------------------------------------

/// out = x W + b, with b broadcast over rows.
template <typename Scalar>
Tensor<Scalar> affine(Tape<Scalar>& tape, const Tensor<Scalar>& x, const Tensor<Scalar>& W,
                      const Tensor<Scalar>& b) {
  const bool ok = x.rank() == 2 && W.rank() == 2 && b.rank() == 1 && x.cols() == W.rows() &&
                  b.size() == W.cols();
  if (!ok) {
    throw DimensionError("affine: x " + shape_string(x.shape()) + ", W " +
                         shape_string(W.shape()) + ", b " + shape_string(b.shape()));
  }
  Matrix<Scalar> out = x.value() * W.value();
  out.rowwise() += b.value().row(0);
  auto result = detail::make_output<Scalar>(Shape{x.rows(), W.cols()}, std::move(out), {&x, &W, &b});
  if (result.requires_grad()) {
    tape.record(result, [x = x, W = W, b = b](const Matrix<Scalar>& g) mutable {
      if (x.requires_grad()) x.grad_buffer().noalias() += g * W.value().transpose();
      if (W.requires_grad()) W.grad_buffer().noalias() += x.value().transpose() * g;
      if (b.requires_grad()) b.grad_buffer().row(0) += g.colwise().sum();
    });
  }
  return result;
}

/// Elementwise max(0, x); the subgradient at exactly zero is taken as 0.
template <typename Scalar>
Tensor<Scalar> relu(Tape<Scalar>& tape, const Tensor<Scalar>& x) {
  Matrix<Scalar> out = x.value().cwiseMax(Scalar(0));
  auto result = detail::make_output<Scalar>(x.shape(), std::move(out), {&x});
  if (result.requires_grad()) {
    tape.record(result, [x = x](const Matrix<Scalar>& g) mutable {
      detail::accumulate(x, Matrix<Scalar>(
                                (x.value().array() > Scalar(0)).select(g, Scalar(0))));
    });
  }
  return result;
}

template <typename Scalar>
Tensor<Scalar> sum(Tape<Scalar>& tape, const Tensor<Scalar>& x) {
  auto result = detail::make_output<Scalar>(Shape{}, Matrix<Scalar>::Constant(1, 1, x.value().sum()), {&x});
  if (result.requires_grad()) {
    tape.record(result, [x = x](const Matrix<Scalar>& g) mutable {
      detail::accumulate(x, Matrix<Scalar>(Matrix<Scalar>::Constant(x.rows(), x.cols(), g(0, 0))));
    });
  }
  return result;
}

template <typename Scalar>
Tensor<Scalar> add(Tape<Scalar>& tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  auto result = detail::make_output<Scalar>(a.shape(), a.value() + b.value(), {&a, &b});
  if (result.requires_grad()) {
    tape.record(result, [a = a, b = b](const Matrix<Scalar>& g) mutable {
      detail::accumulate(a, g);
      detail::accumulate(b, g);
    });
  }
  return result;
}

template <typename Scalar>
Tensor<Scalar> scale(Tape<Scalar>& tape, const Tensor<Scalar>& a, Scalar factor) {
  auto result = detail::make_output<Scalar>(a.shape(), a.value() * factor, {&a});
  if (result.requires_grad()) {
    tape.record(result, [a = a, factor](const Matrix<Scalar>& g) mutable {
      detail::accumulate(a, Matrix<Scalar>(g * factor));
    });
  }
  return result;
}

/// Mean over the batch of -log softmax(logits)[label].
template <typename Scalar>
Tensor<Scalar> softmax_cross_entropy(Tape<Scalar>& tape, const Tensor<Scalar>& logits,
                                     const std::vector<int>& labels) {
  if (logits.rank() != 2 || static_cast<Index>(labels.size()) != logits.rows() || logits.rows() == 0) {
    throw DimensionError("softmax_cross_entropy: logits " + shape_string(logits.shape()) +
                         " with " + std::to_string(labels.size()) + " labels");
  }
  const Index batch = logits.rows();
  const Index classes = logits.cols();
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw IndexError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
  Matrix<Scalar> logp = log_softmax_rows(logits.value());
  Scalar total = 0;
  for (Index i = 0; i < batch; ++i) total -= logp(i, labels[i]);
  auto result = detail::make_output<Scalar>(Shape{}, Matrix<Scalar>::Constant(1, 1, total / Scalar(batch)), {&logits});
  if (result.requires_grad()) {
    tape.record(result, [logits = logits, labels, logp = std::move(logp)](const Matrix<Scalar>& g) mutable {
      Matrix<Scalar> d = logp.array().exp().matrix();
      for (Index i = 0; i < d.rows(); ++i) d(i, labels[i]) -= Scalar(1);
      detail::accumulate(logits, Matrix<Scalar>(d * (g(0, 0) / Scalar(d.rows()))));
    });
  }
  return result;
}

/// Mean over the batch of KL(softmax(p_logits) || softmax(q_logits)).
/// The q side is a constant: no gradient ever flows into q_logits.
template <typename Scalar>
Tensor<Scalar> kl_divergence(Tape<Scalar>& tape, const Tensor<Scalar>& p_logits,
                             const Tensor<Scalar>& q_logits) {
  if (p_logits.shape() != q_logits.shape() || p_logits.rank() != 2 || p_logits.rows() == 0) {
    throw DimensionError("kl_divergence: " + shape_string(p_logits.shape()) + " vs " +
                         shape_string(q_logits.shape()));
  }
  const Index batch = p_logits.rows();
  Matrix<Scalar> logp = log_softmax_rows(p_logits.value());
  const Matrix<Scalar> logq = log_softmax_rows(q_logits.value());
  Matrix<Scalar> diff = logp - logq;
  Matrix<Scalar> p = logp.array().exp().matrix();
  RowVector<Scalar> per_row(batch);
  for (Index i = 0; i < batch; ++i) per_row(i) = p.row(i).dot(diff.row(i));
  const Scalar mean = per_row.sum() / Scalar(batch);
  auto result = detail::make_output<Scalar>(Shape{}, Matrix<Scalar>::Constant(1, 1, mean), {&p_logits});
  if (result.requires_grad()) {
    tape.record(result, [p_logits = p_logits, p = std::move(p), diff = std::move(diff),
                         per_row = std::move(per_row)](const Matrix<Scalar>& g) mutable {
      Matrix<Scalar> d(p.rows(), p.cols());
      for (Index i = 0; i < p.rows(); ++i) {
        d.row(i) = p.row(i).cwiseProduct((diff.row(i).array() - per_row(i)).matrix());
      }
      detail::accumulate(p_logits, Matrix<Scalar>(d * (g(0, 0) / Scalar(p.rows()))));
    });
  }
  return result;
}

}  // namespace fomo

#endif  // FOMO_TENSOR_HPP
