#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace lft {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

Index numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major float64 array. Scalars use shape {1}.
struct Tensor {
  Shape shape{1};
  Vector data = Vector::Zero(1);
  std::optional<Vector> grad;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, Vector values);
  Tensor(Shape s, std::initializer_list<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  Index size() const { return data.size(); }
  Index rank() const { return static_cast<Index>(shape.size()); }
  Index dim(Index i) const { return shape[static_cast<std::size_t>(i)]; }

  double& operator[](Index i) { return data[i]; }
  double operator[](Index i) const { return data[i]; }

  /// Value at a 3-d index of a C×H×W tensor.
  double& at(Index c, Index y, Index x) { return data[(c * shape[1] + y) * shape[2] + x]; }
  double at(Index c, Index y, Index x) const { return data[(c * shape[1] + y) * shape[2] + x]; }

  /// Row-major matrix view; rank-2 tensors only.
  ConstMatrixMap matrix() const;
  MatrixMap matrix();

  bool all_finite() const { return data.allFinite(); }
};

bool same_values(const Tensor& a, const Tensor& b);

/// A trainable tensor with its AdamW moments.
struct Parameter {
  std::string name;
  Tensor tensor;
  Vector first_moment;
  Vector second_moment;
  long step = 0;

  Parameter() = default;
  Parameter(std::string n, Tensor t);

  Index size() const { return tensor.size(); }
  void zero_grad();
};

}  // namespace lft
