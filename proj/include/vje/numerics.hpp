#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace vje {

using Vector = std::vector<double>;

// xoshiro256** seeded through splitmix64. The 64-bit stream is bit-identical on
// every platform; normals go through Box-Muller with a cached spare draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n);
  double standard_normal();
  void discard(std::uint64_t n);

  std::uint64_t counter() const noexcept { return counter_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t& x);

// Deterministic seed derivation for independent substreams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<double> tags);

Vector standard_normal_vec(Rng& rng, std::size_t d);

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng);

double norm2(std::span<const double> v);

// v / max(||v||, eps). A zero vector maps to zero; any vector shorter than eps
// comes back shorter than one.
Vector safe_normalize(std::span<const double> v, double eps);

// log(1 + exp(x)) + floor, overflow safe.
double softplus_floor(double x, double floor);
// Inverse of softplus without the floor: log(exp(y) - 1), y > 0.
double softplus_inverse(double y);

double log_gamma(double x);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

using Integrand = std::function<double(double)>;

// Adaptive Gauss-Kronrod (7/15), tol is absolute. Either bound may be infinite;
// a semi-infinite range maps onto [0, 1) through rho = lo + expm1(u / (1 - u)).
// Throws ConvergenceError carrying the best estimate when the error estimate
// stays above tol.
QuadratureResult quadrature_1d(const Integrand& f, double lo, double hi, double tol,
                               unsigned max_depth = 15);

// Nested 2-D integration over a rectangle with possibly infinite bounds.
QuadratureResult quadrature_2d(const std::function<double(double, double)>& f, double x_lo,
                               double x_hi, double y_lo, double y_hi, double tol);

}  // namespace vje
