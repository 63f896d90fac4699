#include "vje/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vje {

double grad_error(double analytic, double numeric, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

namespace {

void record(GradCheckResult& r, double err, const std::string& where, double rel_tol) {
  if (std::isnan(err) || err > r.max_error) {
    r.max_error = std::isnan(err) ? INFINITY : err;
    r.worst = where;
  }
  r.pass = r.max_error < rel_tol;
}

}  // namespace

GradCheckResult gradcheck(const TapeFn& f, const std::vector<Tensor>& inputs, const GradCheckOptions& opt) {
  auto eval = [&](const std::vector<Tensor>& xs) {
    ad::Tape t;
    std::vector<ad::Var> vs;
    for (const auto& x : xs) vs.push_back(t.variable(x));
    return f(t, vs).item();
  };

  ad::Tape tape;
  std::vector<ad::Var> leaves;
  for (const auto& x : inputs) leaves.push_back(tape.variable(x));
  tape.backward(f(tape, leaves));

  GradCheckResult r;
  std::vector<Tensor> xs = inputs;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Tensor analytic = tape.grad(leaves[k]);
    for (std::size_t i = 0; i < xs[k].size(); ++i) {
      const double x0 = xs[k][i];
      xs[k][i] = x0 + opt.h;
      const double fp = eval(xs);
      xs[k][i] = x0 - opt.h;
      const double fm = eval(xs);
      xs[k][i] = x0;
      const double numeric = (fp - fm) / (2.0 * opt.h);
      record(r, grad_error(analytic[i], numeric, opt.abs_floor),
             "input " + std::to_string(k) + "[" + std::to_string(i) + "]", opt.rel_tol);
    }
  }
  return r;
}

GradCheckResult gradcheck_model(const ModelLossFn& f, Model& model, const GradCheckOptions& opt) {
  auto eval = [&] {
    ad::Tape t;
    const BoundParams b = model.bind(t);
    return f(t, model, b).item();
  };

  ad::Tape tape;
  const BoundParams bound = model.bind(tape);
  const ad::GradientMap grads = tape.backward(f(tape, model, bound));

  GradCheckResult r;
  for (auto& p : model.params()) {
    const Tensor& analytic = grads.at(p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double x0 = p.value[i];
      p.value[i] = x0 + opt.h;
      const double fp = eval();
      p.value[i] = x0 - opt.h;
      const double fm = eval();
      p.value[i] = x0;
      const double numeric = (fp - fm) / (2.0 * opt.h);
      record(r, grad_error(analytic[i], numeric, opt.abs_floor), p.name + "[" + std::to_string(i) + "]", opt.rel_tol);
    }
  }
  return r;
}

}  // namespace vje
