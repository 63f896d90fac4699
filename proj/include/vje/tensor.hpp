#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vje/numerics.hpp"

namespace vje {

// Dense row-major array of rank 0 (scalar), 1 (vector) or 2 (matrix).
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}

  static Tensor scalar(double v);
  static Tensor vector(Vector v);
  static Tensor matrix(std::size_t rows, std::size_t cols, Vector data);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor zeros_like(const Tensor& t) { return zeros(t.shape_); }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const noexcept { return rank() == 2 ? shape_[0] : size(); }
  std::size_t cols() const noexcept { return rank() == 2 ? shape_[1] : 1; }

  double* ptr() noexcept { return data_.data(); }
  const double* ptr() const noexcept { return data_.data(); }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const Vector& values() const noexcept { return data_; }
  Vector& values() noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Value of a rank-0 tensor; throws ShapeError otherwise.
  double item() const;

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  bool all_finite() const noexcept;
  std::string shape_str() const;

 private:
  Tensor(std::vector<std::size_t> shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {}

  std::vector<std::size_t> shape_;
  Vector data_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace vje
