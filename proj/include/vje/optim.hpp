#pragma once

#include <cstddef>
#include <vector>

#include "vje/config.hpp"
#include "vje/model.hpp"
#include "vje/tensor.hpp"

namespace vje {

// Learning rate at fractional epoch e: linear ramp 0 -> lr0 over warmup, then
// lr0 * (1 + cos(pi * progress)) / 2 down to exactly 0 at total_epochs.
double lr_at(const OptimConfig& opt, double epoch);

// SGD with heavy-ball momentum and L2 weight decay folded into the velocity:
// v = m v + g + wd p;  p -= lr v.
class Sgd {
 public:
  Sgd(const ParamStore& params, const OptimConfig& opt);

  void step(ParamStore& params, double lr);
  const std::vector<Tensor>& velocity() const noexcept { return velocity_; }

 private:
  OptimConfig opt_;
  std::vector<Tensor> velocity_;
};

}  // namespace vje
