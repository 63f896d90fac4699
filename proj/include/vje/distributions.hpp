#pragma once

#include <cstddef>
#include <span>

#include "vje/numerics.hpp"

// Closed-form Student-t and Gaussian pieces of the objective. The *_full variants
// keep every normalizing constant and are what the scorers and the quadrature
// checks use; the plain variants drop parameter-free constants like training does.
namespace vje::dist {

inline constexpr double kVarFloor = 1e-6;
inline constexpr double kEpsNorm = 1e-6;

struct PosteriorParams {
  Vector mu;
  Vector sigma2;

  std::size_t dim() const noexcept { return mu.size(); }
  // Throws ShapeError / DomainError when sizes differ or a variance is below the floor.
  void validate() const;
};

// log Gamma((nu+D)/2) - log Gamma(nu/2) - (D/2) log(nu pi)
double log_c_t(double nu, std::size_t d);

struct NllGrad {
  double nll = 0.0;
  Vector grad_z;
};

// Full NLL of the elliptical t with Sigma = diag(sigma2), and its gradient in z:
// (nu+D)/(nu+Q) Sigma^-1 (z - s).
NllGrad nll_elliptical_t(std::span<const double> z, std::span<const double> s, double nu,
                         std::span<const double> sigma2);
// Isotropic case Sigma = lambda I.
NllGrad nll_isotropic_t(std::span<const double> z, std::span<const double> s, double nu, double lambda);

// Log density of rho = ||z - s|| under the isotropic t.
double log_radial_factor(double rho, double nu, double lambda, std::size_t d);

// Log of the 1-D t kernel on the norm residual, constants included.
double log_radial_delta_density(double delta_r, double nu, double lambda);

// (nu+D)/2 log1p(Q/nu) + 1/2 sum log sigma2, Q = sum (z_hat - s_hat)^2 / sigma2.
// Both directions pass through safe_normalize first.
double nll_dir(std::span<const double> z_hat, std::span<const double> s, std::span<const double> sigma2, double nu);
// Same with the ambient normalizer -log C_{nu,D} added.
double nll_dir_full(std::span<const double> z_hat, std::span<const double> s, std::span<const double> sigma2,
                    double nu);

// (nu+1)/2 log1p(dr^2 / nu)
double nll_rad(double delta_r, double nu);
// (nu+1)/2 log1p(dr^2 / (nu lambda)). No log-lambda term, so it falls as lambda grows.
double nll_rad_lambda(double delta_r, double nu, double lambda);
// d nll_rad / d dr, signed.
double nll_rad_grad(double delta_r, double nu);
// (nu+1)/(2 sqrt(nu)), reached at |dr| = sqrt(nu).
double nll_rad_grad_bound(double nu);
// -log_radial_delta_density(dr, nu, 1)
double nll_rad_full(double delta_r, double nu);

// KL(N(mu, diag sigma2) || N(0, I))
double kl_diag_gauss(const PosteriorParams& p);
double kl_diag_gauss(std::span<const double> mu, std::span<const double> sigma2);

// log N(x; mu, diag sigma2)
double log_diag_gauss(std::span<const double> x, std::span<const double> mu, std::span<const double> sigma2);

// |(nu+D)/2 log1p(q/nu) - q/2|
double gaussian_limit_gap(double q, double nu, std::size_t d);

}  // namespace vje::dist
