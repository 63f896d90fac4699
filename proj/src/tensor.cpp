#include "vje/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "vje/error.hpp"

namespace vje {

Tensor Tensor::scalar(double v) { return Tensor({}, Vector{v}); }

Tensor Tensor::vector(Vector v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, Vector data) {
  if (data.size() != rows * cols) {
    throw ShapeError("Tensor::matrix: " + std::to_string(data.size()) + " values for shape [" +
                     std::to_string(rows) + ", " + std::to_string(cols) + "]");
  }
  return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  return Tensor(std::move(shape), Vector(n, 0.0));
}

double Tensor::item() const {
  if (rank() != 0) throw ShapeError("Tensor::item on shape " + shape_str());
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const { return vje::shape_str(shape_); }

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace vje
