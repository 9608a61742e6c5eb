#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace nbt {

// Dense row-major array of doubles, rank 1 or 2.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t n);
  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  // Builds a tensor of the given shape; throws DimensionError if
  // product(shape) != values.size() or the rank is not 1 or 2.
  static Tensor from_shape(std::vector<std::size_t> shape,
                           std::vector<double> values);

  std::size_t rank() const noexcept { return shape_.size(); }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
  // Columns of a matrix; 1 for vectors.
  std::size_t cols() const noexcept {
    return shape_.size() == 2 ? shape_[1] : 1;
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Tensor& other) const noexcept {
    return shape_ == other.shape_;
  }
  bool all_finite() const noexcept;
  void fill(double v);

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);

  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace nbt
