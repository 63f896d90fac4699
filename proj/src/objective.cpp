#include "vje/objective.hpp"

#include <cmath>
#include <string>

#include "vje/error.hpp"

namespace vje {

StepNoise StepNoise::draw(Rng& rng, std::size_t dim, std::size_t samples) {
  StepNoise n;
  for (std::size_t m = 0; m < samples; ++m) {
    n.eps1.push_back(standard_normal_vec(rng, dim));
    n.eps2.push_back(standard_normal_vec(rng, dim));
  }
  return n;
}

ad::Var tape_nll_dir(ad::Var target, ad::Var s, ad::Var sigma2, double nu, double eps_norm) {
  ad::Tape& t = s.tape();
  const auto d = static_cast<double>(s.value().size());
  ad::Var r = ad::normalize(target, eps_norm) - ad::normalize(s, eps_norm);
  ad::Var q = ad::sum(r * r / sigma2);
  ad::Var lt = ad::scale(ad::log1p(q / t.constant(nu)), 0.5 * (nu + d));
  return lt + ad::scale(ad::sum(ad::log(sigma2)), 0.5);
}

ad::Var tape_nll_rad(ad::Var target, ad::Var s, double nu) {
  ad::Tape& t = s.tape();
  ad::Var dr = ad::l2norm(target) - ad::l2norm(s);
  return ad::scale(ad::log1p(dr * dr / t.constant(nu)), 0.5 * (nu + 1.0));
}

ad::Var tape_kl(ad::Var mu, ad::Var sigma2) {
  ad::Var k = sigma2 + mu * mu - ad::log(sigma2);
  return ad::scale(ad::add_scalar(ad::sum(k), -static_cast<double>(mu.value().size())), 0.5);
}

namespace {

void check_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + term + " in the step loss");
}

}  // namespace

namespace {

ad::Var as_target(ad::Tape& tape, ad::Var z, TargetMode mode) {
  switch (mode) {
    case TargetMode::detached: return ad::stop_gradient(z);
    case TargetMode::attached: return z;
    case TargetMode::constant: return tape.constant(z.value());
  }
  return z;
}

}  // namespace

StepLoss vje_step_loss(ad::Tape& tape, ad::Var z1, ad::Var z2, const Model& model, const BoundParams& params,
                       const VjeConfig& cfg, const StepNoise& noise, TargetMode mode) {
  cfg.terms.validate();
  const std::size_t d = z1.value().size();
  if (z2.value().size() != d) {
    throw ShapeError("vje_step_loss: embeddings have lengths " + std::to_string(d) + " and " +
                     std::to_string(z2.value().size()));
  }
  if (noise.eps1.size() != noise.eps2.size() || noise.eps1.empty()) {
    throw ConfigError("vje_step_loss: noise needs the same non-zero sample count per branch");
  }

  const PosteriorVars q1 = model.infer(tape, params, z1);
  const PosteriorVars q2 = model.infer(tape, params, z2);
  ad::Var t1 = as_target(tape, z1, mode);
  ad::Var t2 = as_target(tape, z2, mode);

  const double inv = 1.0 / (2.0 * static_cast<double>(noise.eps1.size()));
  StepLoss out;
  ad::Var total;
  auto accumulate = [&](ad::Var term) { total = total.valid() ? total + term : term; };

  ad::Var l_dir;
  ad::Var l_rad;
  for (std::size_t m = 0; m < noise.eps1.size(); ++m) {
    ad::Var s1 = sample_latent(tape, q1, noise.eps1[m]);
    ad::Var s2 = sample_latent(tape, q2, noise.eps2[m]);
    if (cfg.terms.dir) {
      ad::Var pair = tape_nll_dir(t2, s1, q1.sigma2, cfg.nu, cfg.eps_norm) +
                     tape_nll_dir(t1, s2, q2.sigma2, cfg.nu, cfg.eps_norm);
      l_dir = l_dir.valid() ? l_dir + pair : pair;
    }
    if (cfg.terms.rad) {
      ad::Var pair = tape_nll_rad(t2, s1, cfg.nu) + tape_nll_rad(t1, s2, cfg.nu);
      l_rad = l_rad.valid() ? l_rad + pair : pair;
    }
  }
  if (cfg.terms.dir) {
    l_dir = ad::scale(l_dir, inv);
    out.values.l_dir = l_dir.item();
    check_finite(out.values.l_dir, "l_dir");
    accumulate(l_dir);
  }
  if (cfg.terms.rad) {
    l_rad = ad::scale(l_rad, inv);
    out.values.l_rad = l_rad.item();
    check_finite(out.values.l_rad, "l_rad");
    accumulate(l_rad);
  }
  if (cfg.terms.kl) {
    ad::Var l_kl = ad::scale(tape_kl(q1.mu, q1.sigma2) + tape_kl(q2.mu, q2.sigma2), 0.5);
    out.values.l_kl = l_kl.item();
    check_finite(out.values.l_kl, "l_kl");
    accumulate(ad::scale(l_kl, cfg.beta));
  }
  out.total = total;
  out.values.total = total.item();
  check_finite(out.values.total, "total");
  return out;
}

StepLoss vje_step_loss(ad::Tape& tape, ad::Var z1, ad::Var z2, const Model& model, const BoundParams& params,
                       const VjeConfig& cfg, const StepNoise& noise) {
  return vje_step_loss(tape, z1, z2, model, params, cfg, noise, TargetMode::detached);
}

StepLoss vje_step_loss(ad::Tape& tape, ad::Var z1, ad::Var z2, const Model& model, const BoundParams& params,
                       const VjeConfig& cfg, Rng& rng) {
  const StepNoise noise = StepNoise::draw(rng, z1.value().size(), cfg.mc_samples);
  return vje_step_loss(tape, z1, z2, model, params, cfg, noise);
}

// ---------------------------------------------------------------------------

double log_likelihood_full(std::span<const double> z_tgt, std::span<const double> s, std::span<const double> sigma2,
                           double nu) {
  const double dr = norm2(z_tgt) - norm2(s);
  return -dist::nll_dir_full(z_tgt, s, sigma2, nu) - dist::nll_rad_full(dr, nu);
}

namespace {

ElboEstimate mean_and_se(const Vector& xs) {
  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

Vector draw_posterior(const dist::PosteriorParams& q, Rng& rng) {
  Vector s = standard_normal_vec(rng, q.dim());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = q.mu[i] + std::sqrt(q.sigma2[i]) * s[i];
  return s;
}

}  // namespace

ElboEstimate oneway_elbo(const dist::PosteriorParams& q, std::span<const double> z_tgt, const VjeConfig& cfg,
                         Rng& rng, std::size_t m) {
  if (m == 0) throw ConfigError("oneway_elbo: need at least one sample");
  q.validate();
  if (z_tgt.size() != q.dim()) throw ShapeError("oneway_elbo: target and posterior dimensions differ");
  const double kl = dist::kl_diag_gauss(q);
  Vector terms(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Vector s = draw_posterior(q, rng);
    terms[k] = log_likelihood_full(z_tgt, s, q.sigma2, cfg.nu) - kl;
  }
  return mean_and_se(terms);
}

ElboEstimate oneway_elbo(std::span<const double> z_src, std::span<const double> z_tgt, const Model& model,
                         const VjeConfig& cfg, Rng& rng, std::size_t m) {
  return oneway_elbo(model.infer(z_src), z_tgt, cfg, rng, m);
}

ElboEstimate log_marginal_is(const dist::PosteriorParams& q, std::span<const double> z_tgt, double nu, Rng& rng,
                             std::size_t draws) {
  if (draws == 0) throw ConfigError("log_marginal_is: need at least one draw");
  q.validate();
  const Vector zeros(q.dim(), 0.0);
  const Vector ones(q.dim(), 1.0);
  Vector logw(draws);
  for (std::size_t k = 0; k < draws; ++k) {
    const Vector s = draw_posterior(q, rng);
    logw[k] = log_likelihood_full(z_tgt, s, q.sigma2, nu) + dist::log_diag_gauss(s, zeros, ones) -
              dist::log_diag_gauss(s, q.mu, q.sigma2);
  }
  double mx = logw[0];
  for (double w : logw) mx = std::max(mx, w);
  Vector w(draws);
  for (std::size_t k = 0; k < draws; ++k) w[k] = std::exp(logw[k] - mx);
  const ElboEstimate r = mean_and_se(w);
  // Delta method for the standard error of the log.
  return {mx + std::log(r.value), r.std_error / r.value};
}

}  // namespace vje
