#include "vje/numerics.hpp"

#include <bit>
#include <limits>
#include <cmath>
#include <numbers>

#include "vje/error.hpp"
#include "vje/kernels.hpp"

namespace vje {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  ++counter_;
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw InvalidDimension("uniform_index: n must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::standard_normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

void Rng::discard(std::uint64_t n) {
  for (std::uint64_t i = 0; i < n; ++i) next_u64();
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = base;
  std::uint64_t out = splitmix64(h);
  for (std::uint64_t t : tags) {
    h ^= t + 0x9e3779b97f4a7c15ULL + (out << 6) + (out >> 2);
    out = splitmix64(h);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<double> tags) {
  std::uint64_t h = base;
  std::uint64_t out = splitmix64(h);
  for (double t : tags) {
    h ^= std::bit_cast<std::uint64_t>(t) + 0x9e3779b97f4a7c15ULL + (out << 6) + (out >> 2);
    out = splitmix64(h);
  }
  return out;
}

Vector standard_normal_vec(Rng& rng, std::size_t d) {
  if (d == 0) throw InvalidDimension("standard_normal_vec: dimension must be >= 1");
  Vector v(d);
  for (auto& x : v) x = rng.standard_normal();
  return v;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

double norm2(std::span<const double> v) {
  return std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
}

Vector safe_normalize(std::span<const double> v, double eps) {
  if (!(eps > 0.0)) throw DomainError("safe_normalize: eps must be positive");
  const double scale = 1.0 / std::max(norm2(v), eps);
  Vector out(v.begin(), v.end());
  for (auto& x : out) x *= scale;
  return out;
}

double softplus_floor(double x, double floor) {
  if (!(floor > 0.0)) throw DomainError("softplus_floor: floor must be positive");
  if (x > 30.0) return x + floor;
  return std::log1p(std::exp(x)) + floor;
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw DomainError("softplus_inverse: argument must be positive");
  if (y > 30.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("log_gamma: argument must be positive and finite");
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

}  // namespace vje
