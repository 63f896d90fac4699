#pragma once

#include <span>
#include <vector>

#include "vje/autodiff.hpp"
#include "vje/config.hpp"
#include "vje/distributions.hpp"
#include "vje/model.hpp"
#include "vje/numerics.hpp"

namespace vje {

struct LossBreakdown {
  double l_dir = 0.0;
  double l_rad = 0.0;
  double l_kl = 0.0;
  double total = 0.0;
};

struct StepLoss {
  ad::Var total;
  LossBreakdown values;
};

// Per-branch reparameterization noise, one vector per MC sample.
struct StepNoise {
  std::vector<Vector> eps1;
  std::vector<Vector> eps2;

  // Draw order: for each sample, eps1 then eps2.
  static StepNoise draw(Rng& rng, std::size_t dim, std::size_t samples);
};

// Tape versions of the training terms. `target` is used as given; callers that
// want fixed-observation semantics wrap it in stop_gradient first.
ad::Var tape_nll_dir(ad::Var target, ad::Var s, ad::Var sigma2, double nu, double eps_norm);
ad::Var tape_nll_rad(ad::Var target, ad::Var s, double nu);
ad::Var tape_kl(ad::Var mu, ad::Var sigma2);

// Symmetric one-step loss. Directional and radial NLLs are averaged over both
// directions with the target embedding detached; the KL term is averaged over
// both branches and stays attached. Disabled terms are not recorded at all and
// report 0. Throws NumericError naming the term on NaN/Inf.
StepLoss vje_step_loss(ad::Tape& tape, ad::Var z1, ad::Var z2, const Model& model, const BoundParams& params,
                       const VjeConfig& cfg, Rng& rng);
StepLoss vje_step_loss(ad::Tape& tape, ad::Var z1, ad::Var z2, const Model& model, const BoundParams& params,
                       const VjeConfig& cfg, const StepNoise& noise);

// How the target embedding enters the NLL terms. Training always uses `detached`;
// the other two exist for the gradient-pathway checks.
enum class TargetMode {
  detached,  // stop_gradient(z_j)
  attached,  // z_j itself, gradients flow into the target branch
  constant,  // a fresh constant leaf holding the value of z_j
};

StepLoss vje_step_loss(ad::Tape& tape, ad::Var z1, ad::Var z2, const Model& model, const BoundParams& params,
                       const VjeConfig& cfg, const StepNoise& noise, TargetMode mode);

struct ElboEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// One-way conditional ELBO of y_tgt = (z_tgt / ||z_tgt||, ||z_tgt|| - ||s||) given z_src,
// with all normalizing constants kept. Monte Carlo over m posterior draws.
ElboEstimate oneway_elbo(std::span<const double> z_src, std::span<const double> z_tgt, const Model& model,
                         const VjeConfig& cfg, Rng& rng, std::size_t m);
ElboEstimate oneway_elbo(const dist::PosteriorParams& q, std::span<const double> z_tgt, const VjeConfig& cfg,
                         Rng& rng, std::size_t m);

// log p(y_tgt | s) with constants, the integrand of the ELBO.
double log_likelihood_full(std::span<const double> z_tgt, std::span<const double> s,
                           std::span<const double> sigma2, double nu);

// log mean_k p(y|s_k) p(s_k) / q(s_k), s_k ~ q. Importance-sampling estimate of the
// conditional log-marginal that the ELBO bounds from below.
ElboEstimate log_marginal_is(const dist::PosteriorParams& q, std::span<const double> z_tgt, double nu, Rng& rng,
                             std::size_t draws);

}  // namespace vje
