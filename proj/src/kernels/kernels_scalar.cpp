#include "vje/kernels.hpp"

namespace vje::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(w + r * cols, x, cols);
}

void matvec_t_acc_scalar(const double* w, const double* g, double* out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_scalar(g[r], w + r * cols, out, cols);
  }
}

void outer_acc_scalar(const double* g, const double* x, double* out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_scalar(g[r], x, out + r * cols, cols);
  }
}

void momentum_step_scalar(double* p, double* v, const double* g, std::size_t n, double lr, double momentum,
                          double weight_decay) {
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + weight_decay * p[i];
    p[i] -= lr * v[i];
  }
}

constexpr Table kScalar{
    Isa::scalar,          "scalar",        dot_scalar, axpy_scalar, matvec_scalar, matvec_t_acc_scalar,
    outer_acc_scalar,     momentum_step_scalar,
};

}  // namespace

const Table& detail::scalar_table() { return kScalar; }

}  // namespace vje::kernels
