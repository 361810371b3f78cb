#pragma once

// Reverse-mode differentiation over an explicit tape.
//
// A Tape records every op whose inputs are tracked, in execution order.
// Tape::backward walks that record in reverse and then adds leaf gradients
// into the Parameters they came from. Ops on untracked values (constants,
// or parameters read through a non-recording tape) record nothing, which is
// how inference runs without keeping intermediates alive.

#include "lfsod/tensor.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace lft {

class Tape;

struct Node {
  Tensor value;
  Vector grad;  // adjoint; empty until something flows in
  Tape* tape = nullptr;
  Parameter* parameter = nullptr;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  bool tracked() const { return tape != nullptr; }
  Vector& grad_buffer();
};

/// Handle to a value in (or outside) a computation.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  Index size() const { return node_->value.size(); }
  Index dim(Index i) const { return node_->value.dim(i); }
  bool tracked() const { return node_ && node_->tracked(); }
  bool valid() const { return static_cast<bool>(node_); }

  /// Adjoint after Tape::backward, or nullptr when nothing reached this value.
  const Vector* grad() const { return node_->grad.size() ? &node_->grad : nullptr; }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  /// Leaf for a parameter. Repeated calls return the same leaf, so one
  /// parameter used many times accumulates a single gradient.
  Var parameter(Parameter& p);

  /// Leaf for an arbitrary value whose gradient the caller wants to read.
  Var variable(Tensor t);

  /// Seeds d(root)/d(root) = 1, propagates, and adds leaf adjoints into
  /// Parameter::tensor.grad in leaf-creation order.
  void backward(const Var& root);

  std::size_t size() const { return nodes_.size(); }

  void record(const std::shared_ptr<Node>& node) { nodes_.push_back(node); }

 private:
  bool recording_;
  std::vector<std::shared_ptr<Node>> nodes_;
  std::vector<std::pair<Parameter*, std::shared_ptr<Node>>> leaves_;
};

Var constant(Tensor t);
inline Var constant_scalar(double v) { return constant(Tensor::scalar(v)); }

// ---- ops -------------------------------------------------------------------

/// [M×K]·[K×N]. Accumulation order documented in kernels::gemm.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

/// Softmax over the last dimension with max subtraction.
Var softmax_lastdim(const Var& x);

/// Cross-correlation of one C_in×H×W image with C_out×C_in×k×k weights.
/// Output side is floor((H + 2·pad − k)/stride) + 1. Each output is the sum
/// over (ci, ky, kx) in lexicographic order starting from 0.0, then + bias.
Var conv2d(const Var& x, const Var& w, const Var& b, Index stride, Index pad);

/// Bilinear resize of a C×H×W tensor, half-pixel centres (align_corners=false),
/// negative source coordinates clamped to 0.
Var bilinear_resize(const Var& x, Index out_h, Index out_w);

Var reshape(const Var& x, Shape shape);

/// Concatenate along the leading dimension; trailing dimensions must agree.
Var concat(const std::vector<Var>& parts);

/// Element-wise arithmetic. Shapes must match, or one side holds one value
/// and is broadcast.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }

Var scale(const Var& x, double c);
Var shift(const Var& x, double c);

Var sigmoid(const Var& x);
Var log(const Var& x);
Var softplus(const Var& x);
/// Exact (erf) GELU.
Var gelu(const Var& x);

Var sum(const Var& x);
Var mean(const Var& x);

/// Element i as a one-value tensor.
Var select(const Var& x, Index i);

/// Per-channel normalisation of a C×H×W tensor over its H×W positions
/// (biased variance), followed by scale·x̂ + shift with C-vectors.
Var channel_norm(const Var& x, const Var& scale, const Var& shift, double eps = 1e-5);

/// Element-wise softplus(z) − z·t, the numerically stable BCE on logits.
Var bce_with_logits(const Var& logits, const Var& target);

// ---- test support ----------------------------------------------------------

namespace fault_injection {

enum class Fault { none, broadcast_scalar_grad };

/// Deliberately breaks one backward rule; used to prove the gradient
/// checker catches it. Not thread-safe.
void set(Fault f);
Fault current();

}  // namespace fault_injection

}  // namespace lft
