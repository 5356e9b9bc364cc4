#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace actgen {

/// Dense row-major tensor of 64-bit floats.
///
/// Shapes are lists of positive dimensions; constructing a tensor with a
/// zero dimension throws. Every mutating entry point that accepts external
/// data validates finiteness via require_finite(); NaN/Inf is treated as a
/// contract violation, not a value.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor scalar(double value);
  /// 1 x n row vector.
  static Tensor row(std::vector<double> values);
  /// T x d matrix from equally sized rows.
  static Tensor from_rows(const std::vector<std::vector<double>>& rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool defined() const { return !shape_.empty(); }

  /// Matrix accessors; valid for rank-2 tensors only.
  std::size_t rows() const;
  std::size_t cols() const;
  double at(std::size_t r, std::size_t c) const;
  double& at(std::size_t r, std::size_t c);
  std::vector<double> row_vector(std::size_t r) const;

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

  /// Value of a size-1 tensor.
  double item() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void require_finite(const std::string& what) const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

/// Product of dimensions; throws on an empty shape or any zero dimension.
std::size_t shape_size(const std::vector<std::size_t>& shape);

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace actgen
