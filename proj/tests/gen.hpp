#pragma once

#include <cstddef>
#include <cstdint>

#include "vje/numerics.hpp"
#include "vje/tensor.hpp"

// Hand-rolled generators for property tests. Each property draws its cases from
// a seeded stream, so a failing case reproduces from the trial index.
namespace gen {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  vje::Rng& rng() { return rng_; }
  double real(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  std::size_t size(std::size_t lo, std::size_t hi) { return lo + rng_.uniform_index(hi - lo + 1); }
  bool coin() { return rng_.uniform() < 0.5; }

  vje::Vector vec(std::size_t n, double lo, double hi) {
    vje::Vector v(n);
    for (double& x : v) x = real(lo, hi);
    return v;
  }
  // |x| in [lo, hi], random sign.
  vje::Vector signed_vec(std::size_t n, double lo, double hi) {
    vje::Vector v = vec(n, lo, hi);
    for (double& x : v) {
      if (coin()) x = -x;
    }
    return v;
  }
  vje::Vector normal(std::size_t n) { return vje::standard_normal_vec(rng_, n); }

 private:
  vje::Rng rng_;
};

// Runs body(g, trial) for `trials` cases, each with its own derived seed.
template <class F>
void for_all(std::uint64_t seed, int trials, F&& body) {
  for (int t = 0; t < trials; ++t) {
    Gen g(vje::derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    body(g, t);
  }
}

}  // namespace gen
