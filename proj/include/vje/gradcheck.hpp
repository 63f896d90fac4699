#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vje/autodiff.hpp"
#include "vje/model.hpp"
#include "vje/tensor.hpp"

namespace vje {

struct GradCheckResult {
  double max_error = 0.0;  // worst relative error among entries above the absolute floor
  std::string worst;       // "input k[i]" or parameter name and index
  bool pass = true;
};

struct GradCheckOptions {
  double h = 1e-5;
  double rel_tol = 1e-4;
  double abs_floor = 1e-8;
};

// Error between an analytic and a numeric derivative: 0 when they agree within
// the absolute floor, relative error otherwise.
double grad_error(double analytic, double numeric, double abs_floor);

// f records a scalar on a fresh tape from leaves holding `inputs`. Compares every
// input adjoint with a central difference.
using TapeFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;
GradCheckResult gradcheck(const TapeFn& f, const std::vector<Tensor>& inputs, const GradCheckOptions& opt = {});

// Same for every parameter entry of a model. f records the loss given bound parameters.
using ModelLossFn = std::function<ad::Var(ad::Tape&, const Model&, const BoundParams&)>;
GradCheckResult gradcheck_model(const ModelLossFn& f, Model& model, const GradCheckOptions& opt = {});

}  // namespace vje
