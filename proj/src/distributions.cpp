#include "vje/distributions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "vje/error.hpp"

namespace vje::dist {

namespace {

void require_nu(double nu, const char* where) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError(std::string(where) + ": nu must be positive and finite");
}

void require_dim(std::size_t d, const char* where) {
  if (d == 0) throw InvalidDimension(std::string(where) + ": dimension must be >= 1");
}

void require_same(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw ShapeError(std::string(where) + ": length mismatch " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

void require_positive(std::span<const double> v, const char* where) {
  for (double x : v) {
    if (!(x > 0.0)) throw DomainError(std::string(where) + ": variances must be positive");
  }
}

}  // namespace

void PosteriorParams::validate() const {
  require_same(mu.size(), sigma2.size(), "PosteriorParams");
  for (double v : sigma2) {
    if (!(v >= kVarFloor)) throw DomainError("PosteriorParams: sigma2 below the variance floor");
  }
}

double log_c_t(double nu, std::size_t d) {
  require_nu(nu, "log_c_t");
  require_dim(d, "log_c_t");
  const double dd = static_cast<double>(d);
  return log_gamma(0.5 * (nu + dd)) - log_gamma(0.5 * nu) - 0.5 * dd * std::log(nu * std::numbers::pi);
}

NllGrad nll_elliptical_t(std::span<const double> z, std::span<const double> s, double nu,
                         std::span<const double> sigma2) {
  require_nu(nu, "nll_elliptical_t");
  require_same(z.size(), s.size(), "nll_elliptical_t");
  require_same(z.size(), sigma2.size(), "nll_elliptical_t");
  require_positive(sigma2, "nll_elliptical_t");
  const std::size_t d = z.size();
  double q = 0.0;
  double logdet = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double r = z[i] - s[i];
    q += r * r / sigma2[i];
    logdet += std::log(sigma2[i]);
  }
  const double dd = static_cast<double>(d);
  NllGrad out;
  out.nll = -log_c_t(nu, d) + 0.5 * logdet + 0.5 * (nu + dd) * std::log1p(q / nu);
  out.grad_z.resize(d);
  const double w = (nu + dd) / (nu + q);
  for (std::size_t i = 0; i < d; ++i) out.grad_z[i] = w * (z[i] - s[i]) / sigma2[i];
  return out;
}

NllGrad nll_isotropic_t(std::span<const double> z, std::span<const double> s, double nu, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("nll_isotropic_t: lambda must be positive");
  const Vector sigma2(z.size(), lambda);
  return nll_elliptical_t(z, s, nu, sigma2);
}

double log_radial_factor(double rho, double nu, double lambda, std::size_t d) {
  require_nu(nu, "log_radial_factor");
  require_dim(d, "log_radial_factor");
  if (!(rho > 0.0)) throw DomainError("log_radial_factor: rho must be positive");
  if (!(lambda > 0.0)) throw DomainError("log_radial_factor: lambda must be positive");
  const double dd = static_cast<double>(d);
  const double nl = nu * lambda;
  return std::log(2.0) + log_gamma(0.5 * (nu + dd)) - log_gamma(0.5 * nu) - log_gamma(0.5 * dd) -
         0.5 * dd * std::log(nl) + (dd - 1.0) * std::log(rho) - 0.5 * (nu + dd) * std::log1p(rho * rho / nl);
}

double log_radial_delta_density(double delta_r, double nu, double lambda) {
  require_nu(nu, "log_radial_delta_density");
  if (!(lambda > 0.0)) throw DomainError("log_radial_delta_density: lambda must be positive");
  const double nl = nu * lambda;
  return log_gamma(0.5 * (nu + 1.0)) - log_gamma(0.5 * nu) - 0.5 * std::log(std::numbers::pi * nl) -
         0.5 * (nu + 1.0) * std::log1p(delta_r * delta_r / nl);
}

double nll_dir(std::span<const double> z_hat, std::span<const double> s, std::span<const double> sigma2, double nu) {
  require_nu(nu, "nll_dir");
  require_same(z_hat.size(), s.size(), "nll_dir");
  require_same(z_hat.size(), sigma2.size(), "nll_dir");
  require_positive(sigma2, "nll_dir");
  const Vector zh = safe_normalize(z_hat, kEpsNorm);
  const Vector sh = safe_normalize(s, kEpsNorm);
  double q = 0.0;
  double logdet = 0.0;
  for (std::size_t i = 0; i < zh.size(); ++i) {
    const double r = zh[i] - sh[i];
    q += r * r / sigma2[i];
    logdet += std::log(sigma2[i]);
  }
  return 0.5 * (nu + static_cast<double>(zh.size())) * std::log1p(q / nu) + 0.5 * logdet;
}

double nll_dir_full(std::span<const double> z_hat, std::span<const double> s, std::span<const double> sigma2,
                    double nu) {
  return nll_dir(z_hat, s, sigma2, nu) - log_c_t(nu, z_hat.size());
}

double nll_rad(double delta_r, double nu) { return nll_rad_lambda(delta_r, nu, 1.0); }

double nll_rad_lambda(double delta_r, double nu, double lambda) {
  require_nu(nu, "nll_rad");
  if (!(lambda > 0.0)) throw DomainError("nll_rad: lambda must be positive");
  return 0.5 * (nu + 1.0) * std::log1p(delta_r * delta_r / (nu * lambda));
}

double nll_rad_grad(double delta_r, double nu) {
  require_nu(nu, "nll_rad_grad");
  return (nu + 1.0) / nu * delta_r / (1.0 + delta_r * delta_r / nu);
}

double nll_rad_grad_bound(double nu) {
  require_nu(nu, "nll_rad_grad_bound");
  return (nu + 1.0) / (2.0 * std::sqrt(nu));
}

double nll_rad_full(double delta_r, double nu) { return -log_radial_delta_density(delta_r, nu, 1.0); }

double kl_diag_gauss(std::span<const double> mu, std::span<const double> sigma2) {
  require_same(mu.size(), sigma2.size(), "kl_diag_gauss");
  require_positive(sigma2, "kl_diag_gauss");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    kl += sigma2[i] + mu[i] * mu[i] - 1.0 - std::log(sigma2[i]);
  }
  return 0.5 * kl;
}

double kl_diag_gauss(const PosteriorParams& p) { return kl_diag_gauss(p.mu, p.sigma2); }

double log_diag_gauss(std::span<const double> x, std::span<const double> mu, std::span<const double> sigma2) {
  require_same(x.size(), mu.size(), "log_diag_gauss");
  require_same(x.size(), sigma2.size(), "log_diag_gauss");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - mu[i];
    acc += r * r / sigma2[i] + std::log(2.0 * std::numbers::pi * sigma2[i]);
  }
  return -0.5 * acc;
}

double gaussian_limit_gap(double q, double nu, std::size_t d) {
  require_nu(nu, "gaussian_limit_gap");
  if (!(q >= 0.0)) throw DomainError("gaussian_limit_gap: q must be non-negative");
  return std::abs(0.5 * (nu + static_cast<double>(d)) * std::log1p(q / nu) - 0.5 * q);
}

}  // namespace vje::dist
