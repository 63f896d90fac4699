#include "vje/optim.hpp"

#include <cmath>
#include <numbers>

#include "vje/error.hpp"
#include "vje/kernels.hpp"

namespace vje {

double lr_at(const OptimConfig& opt, double epoch) {
  const auto warm = static_cast<double>(opt.warmup_epochs);
  const auto total = static_cast<double>(opt.total_epochs);
  if (epoch < warm) return opt.lr0 * epoch / warm;
  if (epoch >= total) return 0.0;
  const double progress = (epoch - warm) / (total - warm);
  return opt.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

Sgd::Sgd(const ParamStore& params, const OptimConfig& opt) : opt_(opt) {
  velocity_.reserve(params.size());
  for (const auto& p : params) velocity_.push_back(Tensor::zeros_like(p.value));
}

void Sgd::step(ParamStore& params, double lr) {
  if (params.size() != velocity_.size()) {
    throw ShapeError("Sgd::step: optimizer built for " + std::to_string(velocity_.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params[i];
    if (!p.value.same_shape(p.grad) || !p.value.same_shape(velocity_[i])) {
      throw ShapeError("Sgd::step: shape mismatch for " + p.name);
    }
    kernels::momentum_step(p.value.ptr(), velocity_[i].ptr(), p.grad.ptr(), p.value.size(), lr, opt_.momentum,
                           opt_.weight_decay);
  }
}

}  // namespace vje
