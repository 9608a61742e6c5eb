#include "nbt/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "nbt/errors.hpp"

namespace nbt {

Tensor Tensor::zeros(std::size_t n) {
  Tensor t;
  t.shape_ = {n};
  t.data_.assign(n, 0.0);
  return t;
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  Tensor t;
  t.shape_ = {rows, cols};
  t.data_.assign(rows * cols, 0.0);
  return t;
}

Tensor Tensor::vector(std::vector<double> values) {
  Tensor t;
  t.shape_ = {values.size()};
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return from_shape({rows, cols}, std::move(values));
}

Tensor Tensor::matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t ncols = rows.size() == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(rows.size() * ncols);
  for (const auto& row : rows) {
    if (row.size() != ncols) {
      throw DimensionError("numerics", "ragged matrix literal");
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  return from_shape({rows.size(), ncols}, std::move(values));
}

Tensor Tensor::from_shape(std::vector<std::size_t> shape,
                          std::vector<double> values) {
  if (shape.empty() || shape.size() > 2) {
    throw DimensionError("numerics", "tensor rank must be 1 or 2, got " +
                                         std::to_string(shape.size()));
  }
  std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                  std::multiplies<>());
  if (n != values.size()) {
    throw DimensionError("numerics",
                         "shape product " + std::to_string(n) +
                             " does not match data length " +
                             std::to_string(values.size()));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) {
    throw DimensionError("numerics", "cannot add " + other.shape_string() +
                                         " to " + shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Tensor operator+(Tensor a, const Tensor& b) {
  a += b;
  return a;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("numerics", "dot of length " +
                                         std::to_string(a.size()) + " and " +
                                         std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace nbt
