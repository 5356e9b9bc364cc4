#include "actgen/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace actgen {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  if (shape.empty()) {
    throw std::invalid_argument("tensor shape must have at least one dimension");
  }
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) {
      throw std::invalid_argument("tensor shape has a zero dimension: " + shape_to_string(shape));
    }
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_size(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw std::invalid_argument("tensor value count " + std::to_string(values_.size()) +
                                " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : t.values_) v = value;
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("from_rows: no rows");
  std::size_t d = rows.front().size();
  Tensor t({rows.size(), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != d) {
      throw std::invalid_argument("from_rows: row " + std::to_string(r) + " has length " +
                                  std::to_string(rows[r].size()) + ", expected " + std::to_string(d));
    }
    for (std::size_t c = 0; c < d; ++c) t.values_[r * d + c] = rows[r][c];
  }
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::invalid_argument("rows(): tensor is not rank-2: " + shape_to_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::invalid_argument("cols(): tensor is not rank-2: " + shape_to_string(shape_));
  return shape_[1];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return values_[r * cols() + c];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return values_[r * cols() + c];
}

std::vector<double> Tensor::row_vector(std::size_t r) const {
  std::size_t n = cols();
  std::vector<double> out(n);
  for (std::size_t c = 0; c < n; ++c) out[c] = values_[r * n + c];
  return out;
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item(): tensor has " + std::to_string(size()) + " elements");
  }
  return values_[0];
}

bool Tensor::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::require_finite(const std::string& what) const {
  if (!all_finite()) {
    throw std::runtime_error("non-finite values in " + what);
  }
}

}  // namespace actgen
