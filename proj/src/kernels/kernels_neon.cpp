// AArch64 NEON variant. Advanced SIMD is mandatory on AArch64, so no runtime
// probe is needed beyond compiling this file in.
#include <arm_neon.h>

#include "vje/kernels.hpp"

namespace vje::kernels {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  float64x2_t acc2 = vdupq_n_f64(0.0);
  float64x2_t acc3 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc2 = vfmaq_f64(acc2, vld1q_f64(a + i + 4), vld1q_f64(b + i + 4));
    acc3 = vfmaq_f64(acc3, vld1q_f64(a + i + 6), vld1q_f64(b + i + 6));
  }
  for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  double s = vaddvq_f64(vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_neon(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(w + r * cols, x, cols);
}

void matvec_t_acc_neon(const double* w, const double* g, double* out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_neon(g[r], w + r * cols, out, cols);
  }
}

void outer_acc_neon(const double* g, const double* x, double* out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_neon(g[r], x, out + r * cols, cols);
  }
}

void momentum_step_neon(double* p, double* v, const double* g, std::size_t n, double lr, double momentum,
                        double weight_decay) {
  const float64x2_t vm = vdupq_n_f64(momentum);
  const float64x2_t vwd = vdupq_n_f64(weight_decay);
  const float64x2_t vlr = vdupq_n_f64(-lr);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t pv = vld1q_f64(p + i);
    const float64x2_t step = vfmaq_f64(vld1q_f64(g + i), vwd, pv);
    const float64x2_t vv = vfmaq_f64(step, vm, vld1q_f64(v + i));
    vst1q_f64(v + i, vv);
    vst1q_f64(p + i, vfmaq_f64(pv, vlr, vv));
  }
  for (; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + weight_decay * p[i];
    p[i] -= lr * v[i];
  }
}

constexpr Table kNeon{
    Isa::neon,      "neon",           dot_neon, axpy_neon, matvec_neon, matvec_t_acc_neon,
    outer_acc_neon, momentum_step_neon,
};

}  // namespace

const Table* detail::neon_table() { return &kNeon; }

}  // namespace vje::kernels
