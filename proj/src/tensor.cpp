#include "lfsod/tensor.hpp"

#include "lfsod/errors.hpp"

#include <sstream>

namespace lft {

Index numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void validate(const Shape& shape, Index size) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (Index d : shape) {
    if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape));
  }
  if (numel(shape) != size) {
    throw DimensionError("shape " + to_string(shape) + " holds " + std::to_string(numel(shape)) +
                         " values, data has " + std::to_string(size));
  }
}

}  // namespace

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)) {
  validate(shape, numel(shape));
  data = Vector::Constant(numel(shape), fill);
}

Tensor::Tensor(Shape s, Vector values) : shape(std::move(s)), data(std::move(values)) {
  validate(shape, data.size());
}

Tensor::Tensor(Shape s, std::initializer_list<double> values) : shape(std::move(s)) {
  data.resize(static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) data[i++] = v;
  validate(shape, data.size());
}

ConstMatrixMap Tensor::matrix() const {
  if (rank() != 2) throw DimensionError("matrix view needs a rank-2 tensor, got " + to_string(shape));
  return ConstMatrixMap(data.data(), shape[0], shape[1]);
}

MatrixMap Tensor::matrix() {
  if (rank() != 2) throw DimensionError("matrix view needs a rank-2 tensor, got " + to_string(shape));
  return MatrixMap(data.data(), shape[0], shape[1]);
}

bool same_values(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return false;
  for (Index i = 0; i < a.size(); ++i) {
    if (a.data[i] != b.data[i]) return false;
  }
  return true;
}

Parameter::Parameter(std::string n, Tensor t) : name(std::move(n)), tensor(std::move(t)) {
  tensor.requires_grad = true;
  first_moment = Vector::Zero(tensor.size());
  second_moment = Vector::Zero(tensor.size());
}

void Parameter::zero_grad() { tensor.grad.reset(); }

}  // namespace lft
