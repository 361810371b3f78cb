#include "lfsod/autograd.hpp"

#include "kernels.hpp"
#include "lfsod/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace lft {

// ---- fault injection -------------------------------------------------------

namespace fault_injection {
namespace {
Fault g_fault = Fault::none;
}
void set(Fault f) { g_fault = f; }
Fault current() { return g_fault; }
}  // namespace fault_injection

// ---- tape ------------------------------------------------------------------

Vector& Node::grad_buffer() {
  if (grad.size() == 0) grad = Vector::Zero(value.size());
  return grad;
}

Var Tape::parameter(Parameter& p) {
  for (auto& [param, node] : leaves_) {
    if (param == &p) return Var(node);
  }
  auto node = std::make_shared<Node>();
  node->value = Tensor(p.tensor.shape, p.tensor.data);
  node->parameter = &p;
  if (recording_) {
    node->tape = this;
    nodes_.push_back(node);
  }
  leaves_.emplace_back(&p, node);
  return Var(node);
}

Var Tape::variable(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  node->value.grad.reset();
  if (recording_) {
    node->tape = this;
    nodes_.push_back(node);
  }
  return Var(node);
}

void Tape::backward(const Var& root) {
  if (!root.tracked() || root.node()->tape != this) {
    throw ContractError("backward root is not recorded on this tape");
  }
  if (root.size() != 1) {
    throw ContractError("backward root must hold one value, got shape " + to_string(root.shape()));
  }
  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& node = **it;
    if (node.grad.size() && node.backward) node.backward(node);
  }
  for (auto& [param, node] : leaves_) {
    if (!node->grad.size()) continue;
    auto& g = param->tensor.grad;
    if (!g) {
      g = node->grad;
    } else {
      *g += node->grad;
    }
  }
}

Var constant(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  node->value.grad.reset();
  node->value.requires_grad = false;
  return Var(node);
}

// ---- op plumbing -----------------------------------------------------------

namespace {

using Backward = std::function<void(Node&)>;

Var make_op(Tensor value, const std::vector<Var>& inputs, Backward backward) {
  Tape* tape = nullptr;
  for (const Var& v : inputs) {
    if (!v.valid()) throw ContractError("op input is an empty Var");
    if (!v.tracked()) continue;
    if (tape && tape != v.node()->tape) throw ContractError("op inputs recorded on different tapes");
    tape = v.node()->tape;
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (tape && tape->recording()) {
    node->tape = tape;
    for (const Var& v : inputs) node->inputs.push_back(v.node());
    node->backward = std::move(backward);
    tape->record(node);
  }
  return Var(node);
}

Var make_op(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return make_op(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

void require_rank(const Var& v, Index rank, const char* op) {
  if (v.value().rank() != rank) {
    throw DimensionError(std::string(op) + " expects a rank-" + std::to_string(rank) + " tensor, got " +
                         to_string(v.shape()));
  }
}

Vector transposed(const Vector& m, Index rows, Index cols) {
  Vector out(m.size());
  kernels::transpose(m.data(), out.data(), rows, cols);
  return out;
}

Vector gemm(const double* a, const double* b, Index m, Index k, Index n) {
  Vector out(m * n);
  kernels::gemm(a, b, out.data(), m, k, n);
  return out;
}

// Backward products go through Eigen, which reads transposed operands in
// place. Only forward values are pinned to the fixed-order kernel.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

ConstMatrixMap matrix(const double* data, Index rows, Index cols) { return ConstMatrixMap(data, rows, cols); }
MatrixMap matrix(Vector& data, Index rows, Index cols) { return MatrixMap(data.data(), rows, cols); }

double sigmoid_value(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus_value(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

template <typename F>
Var unary(const Var& x, F&& value_fn, std::function<double(double, double)> deriv) {
  Tensor out(x.shape());
  const Vector& xv = x.value().data;
  for (Index i = 0; i < xv.size(); ++i) out.data[i] = value_fn(xv[i]);
  return make_op(std::move(out), {x}, [deriv](Node& self) {
    Node& in = input(self, 0);
    if (!in.tracked()) return;
    Vector& g = in.grad_buffer();
    for (Index i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(in.value.data[i], self.value.data[i]);
  });
}

enum class Broadcast { none, left_scalar, right_scalar };

Broadcast broadcast_kind(const Var& a, const Var& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::none;
  if (a.size() == 1) return Broadcast::left_scalar;
  if (b.size() == 1) return Broadcast::right_scalar;
  throw DimensionError(std::string(op) + ": shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                       " do not match");
}

// Adds `contribution` (full output size) into an input that may be a
// broadcast scalar.
void add_into(Node& in, const Vector& contribution, bool reduce) {
  if (!in.tracked()) return;
  Vector& g = in.grad_buffer();
  if (reduce) {
    double s = 0.0;
    for (Index i = 0; i < contribution.size(); ++i) s += contribution[i];
    g[0] += s;
  } else {
    g += contribution;
  }
}

struct Operands {
  Broadcast kind;
  Shape shape;
};

Operands operands(const Var& a, const Var& b, const char* name) {
  const Broadcast kind = broadcast_kind(a, b, name);
  return {kind, kind == Broadcast::left_scalar ? b.shape() : a.shape()};
}

inline double lhs(const Vector& v, Broadcast k, Index i) { return k == Broadcast::left_scalar ? v[0] : v[i]; }
inline double rhs(const Vector& v, Broadcast k, Index i) { return k == Broadcast::right_scalar ? v[0] : v[i]; }

}  // namespace

// ---- linear algebra --------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + to_string(a.shape()) + " · " + to_string(b.shape()));
  }
  Tensor out({m, n}, gemm(a.value().data.data(), b.value().data.data(), m, k, n));
  return make_op(std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& na = input(self, 0);
    Node& nb = input(self, 1);
    const auto g = matrix(self.grad.data(), m, n);
    if (na.tracked()) {
      matrix(na.grad_buffer(), m, k).noalias() += g * matrix(nb.value.data.data(), k, n).transpose();
    }
    if (nb.tracked()) {
      matrix(nb.grad_buffer(), k, n).noalias() += matrix(na.value.data.data(), m, k).transpose() * g;
    }
  });
}

Var transpose(const Var& a) {
  require_rank(a, 2, "transpose");
  const Index r = a.dim(0), c = a.dim(1);
  Tensor out({c, r}, transposed(a.value().data, r, c));
  return make_op(std::move(out), {a}, [r, c](Node& self) {
    Node& in = input(self, 0);
    if (in.tracked()) in.grad_buffer() += transposed(self.grad, c, r);
  });
}

Var softmax_lastdim(const Var& x) {
  const Index n = x.shape().back();
  const Index rows = x.size() / n;
  Tensor out(x.shape());
  const double* xv = x.value().data.data();
  double* yv = out.data.data();
  for (Index r = 0; r < rows; ++r) {
    const double* xr = xv + r * n;
    double* yr = yv + r * n;
    double mx = xr[0];
    for (Index j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
    double total = 0.0;
    for (Index j = 0; j < n; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    for (Index j = 0; j < n; ++j) yr[j] /= total;
  }
  return make_op(std::move(out), {x}, [rows, n](Node& self) {
    Node& in = input(self, 0);
    if (!in.tracked()) return;
    Vector& g = in.grad_buffer();
    for (Index r = 0; r < rows; ++r) {
      const double* y = self.value.data.data() + r * n;
      const double* go = self.grad.data() + r * n;
      double dot = 0.0;
      for (Index j = 0; j < n; ++j) dot += go[j] * y[j];
      for (Index j = 0; j < n; ++j) g[r * n + j] += y[j] * (go[j] - dot);
    }
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, Index stride, Index pad) {
  require_rank(x, 3, "conv2d input");
  require_rank(w, 4, "conv2d weight");
  const Index cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const Index cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin || w.dim(3) != k) {
    throw DimensionError("conv2d: weight " + to_string(w.shape()) + " does not fit input " + to_string(x.shape()));
  }
  if (b.size() != cout) {
    throw DimensionError("conv2d: bias " + to_string(b.shape()) + " does not fit weight " + to_string(w.shape()));
  }
  if (k % 2 == 0) throw ConfigError("conv2d: kernel size must be odd, got " + std::to_string(k));
  if (stride < 1 || pad < 0) throw ConfigError("conv2d: stride must be >= 1 and pad >= 0");
  if (h + 2 * pad < k || wd + 2 * pad < k) {
    throw ConfigError("conv2d: kernel " + std::to_string(k) + " with pad " + std::to_string(pad) +
                      " leaves no output positions for input " + to_string(x.shape()));
  }
  kernels::ConvGeometry g{cin, h, wd, k, stride, pad, (h + 2 * pad - k) / stride + 1, (wd + 2 * pad - k) / stride + 1};
  const bool pointwise = k == 1 && stride == 1 && pad == 0;
  const Index patch = g.patch_size(), positions = g.positions();

  Vector col;
  if (!pointwise) {
    col.resize(patch * positions);
    kernels::im2col(x.value().data.data(), g, col.data());
  }
  const double* colp = pointwise ? x.value().data.data() : col.data();
  Tensor out({cout, g.out_height, g.out_width}, gemm(w.value().data.data(), colp, cout, patch, positions));
  for (Index co = 0; co < cout; ++co) {
    const double bias = b.value().data[co];
    double* row = out.data.data() + co * positions;
    for (Index p = 0; p < positions; ++p) row[p] += bias;
  }

  return make_op(std::move(out), {x, w, b}, [g, pointwise, cout](Node& self) {
    Node& nx = input(self, 0);
    Node& nw = input(self, 1);
    Node& nb = input(self, 2);
    const Index patch = g.patch_size(), positions = g.positions();
    if (nw.tracked()) {
      Vector colbuf;
      const double* colp = nx.value.data.data();
      if (!pointwise) {
        colbuf.resize(patch * positions);
        kernels::im2col(nx.value.data.data(), g, colbuf.data());
        colp = colbuf.data();
      }
      matrix(nw.grad_buffer(), cout, patch).noalias() +=
          matrix(self.grad.data(), cout, positions) * matrix(colp, patch, positions).transpose();
    }
    if (nb.tracked()) {
      Vector& gb = nb.grad_buffer();
      for (Index co = 0; co < cout; ++co) {
        double s = 0.0;
        const double* row = self.grad.data() + co * positions;
        for (Index p = 0; p < positions; ++p) s += row[p];
        gb[co] += s;
      }
    }
    if (nx.tracked()) {
      Vector& gx = nx.grad_buffer();
      const auto wt = matrix(nw.value.data.data(), cout, patch).transpose();
      const auto gy = matrix(self.grad.data(), cout, positions);
      if (pointwise) {
        matrix(gx, patch, positions).noalias() += wt * gy;
      } else {
        Vector gcol(patch * positions);
        matrix(gcol, patch, positions).noalias() = wt * gy;
        kernels::col2im_add(gcol.data(), g, gx.data());
      }
    }
  });
}

// ---- resampling ------------------------------------------------------------

namespace {

struct Taps {
  std::vector<Index> lo, hi;
  std::vector<double> frac;
};

Taps half_pixel_taps(Index in, Index out) {
  Taps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Index o = 0; o < out; ++o) {
    double src = scale * (static_cast<double>(o) + 0.5) - 0.5;
    if (src < 0.0) src = 0.0;
    Index lo = static_cast<Index>(src);
    if (lo > in - 1) lo = in - 1;
    t.lo[o] = lo;
    t.hi[o] = lo < in - 1 ? lo + 1 : lo;
    t.frac[o] = src - static_cast<double>(lo);
  }
  return t;
}

}  // namespace

Var bilinear_resize(const Var& x, Index out_h, Index out_w) {
  require_rank(x, 3, "bilinear_resize");
  if (out_h < 1 || out_w < 1) throw ConfigError("bilinear_resize: output size must be positive");
  const Index c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h == out_h && w == out_w) {
    return make_op(Tensor(x.shape(), x.value().data), {x}, [](Node& self) {
      Node& in = input(self, 0);
      if (in.tracked()) in.grad_buffer() += self.grad;
    });
  }
  const Taps ty = half_pixel_taps(h, out_h), tx = half_pixel_taps(w, out_w);
  Tensor out({c, out_h, out_w});
  const Vector& v = x.value().data;
  for (Index ch = 0; ch < c; ++ch) {
    const double* plane = v.data() + ch * h * w;
    for (Index oy = 0; oy < out_h; ++oy) {
      const double* r0 = plane + ty.lo[oy] * w;
      const double* r1 = plane + ty.hi[oy] * w;
      const double ly = ty.frac[oy];
      for (Index ox = 0; ox < out_w; ++ox) {
        const Index x0 = tx.lo[ox], x1 = tx.hi[ox];
        const double lx = tx.frac[ox];
        const double top = r0[x0] + lx * (r0[x1] - r0[x0]);
        const double bot = r1[x0] + lx * (r1[x1] - r1[x0]);
        out.at(ch, oy, ox) = top + ly * (bot - top);
      }
    }
  }
  return make_op(std::move(out), {x}, [ty, tx, c, h, w, out_h, out_w](Node& self) {
    Node& in = input(self, 0);
    if (!in.tracked()) return;
    Vector& g = in.grad_buffer();
    for (Index ch = 0; ch < c; ++ch) {
      double* plane = g.data() + ch * h * w;
      const double* go = self.grad.data() + ch * out_h * out_w;
      for (Index oy = 0; oy < out_h; ++oy) {
        const double ly = ty.frac[oy];
        double* r0 = plane + ty.lo[oy] * w;
        double* r1 = plane + ty.hi[oy] * w;
        for (Index ox = 0; ox < out_w; ++ox) {
          const double gv = go[oy * out_w + ox];
          const double lx = tx.frac[ox];
          r0[tx.lo[ox]] += gv * (1.0 - ly) * (1.0 - lx);
          r0[tx.hi[ox]] += gv * (1.0 - ly) * lx;
          r1[tx.lo[ox]] += gv * ly * (1.0 - lx);
          r1[tx.hi[ox]] += gv * ly * lx;
        }
      }
    }
  });
}

// ---- shape ops -------------------------------------------------------------

Var reshape(const Var& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  return make_op(Tensor(std::move(shape), x.value().data), {x}, [](Node& self) {
    Node& in = input(self, 0);
    if (in.tracked()) in.grad_buffer() += self.grad;
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  Shape trailing(parts[0].shape().begin() + 1, parts[0].shape().end());
  Index lead = 0;
  for (const Var& p : parts) {
    Shape t(p.shape().begin() + 1, p.shape().end());
    if (t != trailing) {
      throw DimensionError("concat: " + to_string(p.shape()) + " does not match " + to_string(parts[0].shape()));
    }
    lead += p.dim(0);
  }
  Shape shape = parts[0].shape();
  shape[0] = lead;
  Tensor out(shape);
  Index offset = 0;
  for (const Var& p : parts) {
    out.data.segment(offset, p.size()) = p.value().data;
    offset += p.size();
  }
  return make_op(std::move(out), parts, [](Node& self) {
    Index offset = 0;
    for (auto& in : self.inputs) {
      const Index n = in->value.size();
      if (in->tracked()) in->grad_buffer() += self.grad.segment(offset, n);
      offset += n;
    }
  });
}

// ---- element-wise ----------------------------------------------------------

Var add(const Var& a, const Var& b) {
  const auto [kind, shape] = operands(a, b, "add");
  Tensor out(shape);
  for (Index i = 0; i < out.size(); ++i) {
    out.data[i] = lhs(a.value().data, kind, i) + rhs(b.value().data, kind, i);
  }
  return make_op(std::move(out), {a, b}, [kind](Node& self) {
    add_into(input(self, 0), self.grad, kind == Broadcast::left_scalar);
    add_into(input(self, 1), self.grad, kind == Broadcast::right_scalar);
  });
}

Var sub(const Var& a, const Var& b) {
  const auto [kind, shape] = operands(a, b, "sub");
  Tensor out(shape);
  for (Index i = 0; i < out.size(); ++i) {
    out.data[i] = lhs(a.value().data, kind, i) - rhs(b.value().data, kind, i);
  }
  return make_op(std::move(out), {a, b}, [kind](Node& self) {
    add_into(input(self, 0), self.grad, kind == Broadcast::left_scalar);
    add_into(input(self, 1), -self.grad, kind == Broadcast::right_scalar);
  });
}

Var mul(const Var& a, const Var& b) {
  const auto [kind, shape] = operands(a, b, "mul");
  Tensor out(shape);
  for (Index i = 0; i < out.size(); ++i) {
    out.data[i] = lhs(a.value().data, kind, i) * rhs(b.value().data, kind, i);
  }
  return make_op(std::move(out), {a, b}, [kind](Node& self) {
    Node& na = input(self, 0);
    Node& nb = input(self, 1);
    const Index n = self.grad.size();
    const double fault = fault_injection::current() == fault_injection::Fault::broadcast_scalar_grad ? 1.5 : 1.0;
    if (na.tracked()) {
      Vector c(n);
      for (Index i = 0; i < n; ++i) c[i] = self.grad[i] * rhs(nb.value.data, kind, i);
      const bool reduce = kind == Broadcast::left_scalar;
      if (reduce) c *= fault;
      add_into(na, c, reduce);
    }
    if (nb.tracked()) {
      Vector c(n);
      for (Index i = 0; i < n; ++i) c[i] = self.grad[i] * lhs(na.value.data, kind, i);
      const bool reduce = kind == Broadcast::right_scalar;
      if (reduce) c *= fault;
      add_into(nb, c, reduce);
    }
  });
}

Var div(const Var& a, const Var& b) {
  const auto [kind, shape] = operands(a, b, "div");
  Tensor out(shape);
  for (Index i = 0; i < out.size(); ++i) {
    out.data[i] = lhs(a.value().data, kind, i) / rhs(b.value().data, kind, i);
  }
  return make_op(std::move(out), {a, b}, [kind](Node& self) {
    Node& na = input(self, 0);
    Node& nb = input(self, 1);
    const Index n = self.grad.size();
    if (na.tracked()) {
      Vector c(n);
      for (Index i = 0; i < n; ++i) c[i] = self.grad[i] / rhs(nb.value.data, kind, i);
      add_into(na, c, kind == Broadcast::left_scalar);
    }
    if (nb.tracked()) {
      Vector c(n);
      for (Index i = 0; i < n; ++i) {
        const double d = rhs(nb.value.data, kind, i);
        c[i] = -self.grad[i] * lhs(na.value.data, kind, i) / (d * d);
      }
      add_into(nb, c, kind == Broadcast::right_scalar);
    }
  });
}

Var scale(const Var& x, double c) {
  Tensor out(x.shape(), Vector(x.value().data * c));
  return make_op(std::move(out), {x}, [c](Node& self) {
    Node& in = input(self, 0);
    if (in.tracked()) in.grad_buffer() += self.grad * c;
  });
}

Var shift(const Var& x, double c) {
  Tensor out(x.shape(), Vector(x.value().data.array() + c));
  return make_op(std::move(out), {x}, [](Node& self) {
    Node& in = input(self, 0);
    if (in.tracked()) in.grad_buffer() += self.grad;
  });
}

Var sigmoid(const Var& x) {
  return unary(x, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var log(const Var& x) {
  return unary(x, [](double z) { return std::log(z); }, [](double z, double) { return 1.0 / z; });
}

Var softplus(const Var& x) {
  return unary(x, softplus_value, [](double z, double) { return sigmoid_value(z); });
}

Var gelu(const Var& x) {
  return unary(
      x, [](double z) { return 0.5 * z * (1.0 + std::erf(z * std::numbers::sqrt2 / 2.0)); },
      [](double z, double) {
        const double cdf = 0.5 * (1.0 + std::erf(z * std::numbers::sqrt2 / 2.0));
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + z * pdf;
      });
}

// ---- reductions ------------------------------------------------------------

Var sum(const Var& x) {
  double s = 0.0;
  const Vector& v = x.value().data;
  for (Index i = 0; i < v.size(); ++i) s += v[i];
  return make_op(Tensor::scalar(s), {x}, [](Node& self) {
    Node& in = input(self, 0);
    if (in.tracked()) in.grad_buffer().array() += self.grad[0];
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Var select(const Var& x, Index i) {
  if (i < 0 || i >= x.size()) {
    throw DimensionError("select: index " + std::to_string(i) + " outside " + to_string(x.shape()));
  }
  return make_op(Tensor::scalar(x.value().data[i]), {x}, [i](Node& self) {
    Node& in = input(self, 0);
    if (in.tracked()) in.grad_buffer()[i] += self.grad[0];
  });
}

Var channel_norm(const Var& x, const Var& scale_v, const Var& shift_v, double eps) {
  if (x.value().rank() < 2) throw DimensionError("channel_norm expects C×… input, got " + to_string(x.shape()));
  const Index c = x.dim(0);
  const Index n = x.size() / c;
  if (scale_v.size() != c || shift_v.size() != c) {
    throw DimensionError("channel_norm: scale/shift must hold " + std::to_string(c) + " values");
  }
  Tensor out(x.shape());
  std::vector<double> mu(c), inv(c);
  const double* xv = x.value().data.data();
  for (Index ch = 0; ch < c; ++ch) {
    const double* row = xv + ch * n;
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += row[i];
    const double m = s / static_cast<double>(n);
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) ss += (row[i] - m) * (row[i] - m);
    const double iv = 1.0 / std::sqrt(ss / static_cast<double>(n) + eps);
    mu[ch] = m;
    inv[ch] = iv;
    const double gam = scale_v.value().data[ch], bet = shift_v.value().data[ch];
    double* o = out.data.data() + ch * n;
    for (Index i = 0; i < n; ++i) o[i] = gam * ((row[i] - m) * iv) + bet;
  }
  return make_op(std::move(out), {x, scale_v, shift_v}, [c, n, mu, inv](Node& self) {
    Node& nx = input(self, 0);
    Node& ns = input(self, 1);
    Node& nt = input(self, 2);
    const double dn = static_cast<double>(n);
    for (Index ch = 0; ch < c; ++ch) {
      const double* row = nx.value.data.data() + ch * n;
      const double* go = self.grad.data() + ch * n;
      const double gam = ns.value.data[ch];
      double sum_g = 0.0, sum_gx = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double xh = (row[i] - mu[ch]) * inv[ch];
        sum_g += go[i];
        sum_gx += go[i] * xh;
      }
      if (ns.tracked()) ns.grad_buffer()[ch] += sum_gx;
      if (nt.tracked()) nt.grad_buffer()[ch] += sum_g;
      if (nx.tracked()) {
        double* gx = nx.grad_buffer().data() + ch * n;
        const double mean_d = gam * sum_g / dn;
        const double mean_dx = gam * sum_gx / dn;
        for (Index i = 0; i < n; ++i) {
          const double xh = (row[i] - mu[ch]) * inv[ch];
          gx[i] += inv[ch] * (gam * go[i] - mean_d - xh * mean_dx);
        }
      }
    }
  });
}

Var bce_with_logits(const Var& logits, const Var& target) {
  if (logits.shape() != target.shape()) {
    throw DimensionError("bce_with_logits: " + to_string(logits.shape()) + " vs " + to_string(target.shape()));
  }
  Tensor out(logits.shape());
  for (Index i = 0; i < out.size(); ++i) {
    const double z = logits.value().data[i];
    out.data[i] = softplus_value(z) - z * target.value().data[i];
  }
  return make_op(std::move(out), {logits, target}, [](Node& self) {
    Node& nz = input(self, 0);
    Node& nt = input(self, 1);
    const Index n = self.grad.size();
    if (nz.tracked()) {
      Vector& g = nz.grad_buffer();
      for (Index i = 0; i < n; ++i) g[i] += self.grad[i] * (sigmoid_value(nz.value.data[i]) - nt.value.data[i]);
    }
    if (nt.tracked()) {
      Vector& g = nt.grad_buffer();
      for (Index i = 0; i < n; ++i) g[i] -= self.grad[i] * nz.value.data[i];
    }
  });
}

}  // namespace lft
