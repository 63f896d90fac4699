#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops used by the tape, the model forward pass and
// the optimizer. Every entry has a scalar reference; SIMD variants are picked at
// runtime from what the CPU reports. VJE_ISA=scalar|avx2|neon overrides detection.
namespace vje::kernels {

enum class Isa { scalar, avx2, neon };

struct Table {
  Isa isa;
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x, W row-major rows x cols
  void (*matvec)(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols);
  // out += W^T g
  void (*matvec_t_acc)(const double* w, const double* g, double* out, std::size_t rows, std::size_t cols);
  // out += g x^T
  void (*outer_acc)(const double* g, const double* x, double* out, std::size_t rows, std::size_t cols);
  // v = momentum * v + g + wd * p;  p -= lr * v
  void (*momentum_step)(double* p, double* v, const double* g, std::size_t n, double lr, double momentum,
                        double weight_decay);
};

bool available(Isa isa);
const Table& table(Isa isa);
const Table& active();
// Switches the process-wide table. Throws when the ISA is not usable here.
void select(Isa isa);
Isa detect_best();
std::string_view isa_name(Isa isa);

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void matvec(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
  active().matvec(w, x, y, rows, cols);
}
inline void matvec_t_acc(const double* w, const double* g, double* out, std::size_t rows, std::size_t cols) {
  active().matvec_t_acc(w, g, out, rows, cols);
}
inline void outer_acc(const double* g, const double* x, double* out, std::size_t rows, std::size_t cols) {
  active().outer_acc(g, x, out, rows, cols);
}
inline void momentum_step(double* p, double* v, const double* g, std::size_t n, double lr, double momentum,
                          double weight_decay) {
  active().momentum_step(p, v, g, n, lr, momentum, weight_decay);
}

namespace detail {
const Table& scalar_table();
const Table* avx2_table();  // nullptr when not compiled in
const Table* neon_table();
}  // namespace detail

}  // namespace vje::kernels
