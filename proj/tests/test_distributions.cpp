#include <doctest.h>

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "gen.hpp"
#include "vje/distributions.hpp"
#include "vje/error.hpp"

using namespace vje;
using namespace vje::dist;

TEST_CASE("log_c_t") {
  CHECK(log_c_t(1.0, 1) == doctest::Approx(-1.1447298858494002).epsilon(1e-14));
  CHECK(std::abs(log_c_t(1e8, 1) + 0.5 * std::log(2.0 * std::numbers::pi)) < 1e-6);
  CHECK_THROWS_AS(log_c_t(0.0, 1), DomainError);
  CHECK_THROWS_AS(log_c_t(1.0, 0), InvalidDimension);
}

TEST_CASE("nll_elliptical_t") {
  const Vector z{1.0}, s{0.0}, one{1.0};
  // Cauchy density at residual 1 is 1/(2 pi).
  CHECK(nll_elliptical_t(z, s, 1.0, one).nll == doctest::Approx(std::log(2.0 * std::numbers::pi)).epsilon(1e-14));

  gen::for_all(51, 20, [](gen::Gen& g, int) {
    const std::size_t d = g.size(1, 8);
    const Vector s = g.normal(d);
    const Vector sigma2 = g.vec(d, 0.2, 3.0);
    const double nu = g.real(0.5, 20.0);
    // Zero residual leaves the log-determinant and the normalizer.
    double half_logdet = 0.0;
    for (double v : sigma2) half_logdet += 0.5 * std::log(v);
    CHECK(nll_elliptical_t(s, s, nu, sigma2).nll == doctest::Approx(half_logdet - log_c_t(nu, d)).epsilon(1e-12));

    // Closed-form gradient against central differences.
    const Vector z = g.normal(d);
    const auto r = nll_elliptical_t(z, s, nu, sigma2);
    Vector zp = z;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = 1e-5;
      zp[i] = z[i] + h;
      const double up = nll_elliptical_t(zp, s, nu, sigma2).nll;
      zp[i] = z[i] - h;
      const double down = nll_elliptical_t(zp, s, nu, sigma2).nll;
      zp[i] = z[i];
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(fd - r.grad_z[i]) <= 1e-4 * std::max(std::abs(fd), 1e-4));
    }
  });

  const Vector bad{0.0};
  CHECK_THROWS_AS(nll_elliptical_t(z, s, 1.0, bad), DomainError);
  const Vector two{1.0, 1.0};
  CHECK_THROWS_AS(nll_elliptical_t(z, two, 1.0, one), ShapeError);
}

TEST_CASE("radial factor") {
  CHECK(std::exp(log_radial_factor(1.0, 1.0, 1.0, 1)) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));
  CHECK(std::isfinite(log_radial_factor(1e-300, 3.0, 1.0, 8)));
  CHECK(log_radial_factor(1e-300, 3.0, 1.0, 8) < -1000.0);
  CHECK_THROWS_AS(log_radial_factor(0.0, 3.0, 1.0, 2), DomainError);

  struct Case {
    std::size_t d;
    double nu, lambda;
  };
  for (const Case c : {Case{2, 0.5, 1.0}, Case{8, 3.0, 1.0}, Case{64, 20.0, 2.0}}) {
    const auto r = quadrature_1d(
        [&](double rho) { return rho <= 0.0 ? 0.0 : std::exp(log_radial_factor(rho, c.nu, c.lambda, c.d)); }, 0.0,
        std::numeric_limits<double>::infinity(), 1e-9);
    CHECK(std::abs(r.value - 1.0) < 1e-6);
  }
}

TEST_CASE("nll_dir") {
  const Vector a{1.0, 0.0}, b{0.0, 1.0}, one{1.0, 1.0};
  CHECK(nll_dir(a, a, one, 3.0) == 0.0);
  CHECK(nll_dir(a, b, one, 2.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  // s is normalized inside.
  const Vector b5{0.0, 5.0};
  CHECK(nll_dir(a, b5, one, 2.0) == nll_dir(a, b, one, 2.0));

  // Doubling sigma2 trades the quadratic term against the log-determinant.
  gen::for_all(53, 50, [](gen::Gen& g, int) {
    const std::size_t d = g.size(2, 16);
    const Vector z = safe_normalize(g.normal(d), 1e-12);
    const Vector s = g.normal(d);
    const Vector sigma2 = g.vec(d, 0.1, 2.0);
    const double nu = g.real(1.0, 10.0);
    Vector doubled = sigma2;
    for (double& v : doubled) v *= 2.0;
    const Vector sh = safe_normalize(s, 1e-6);
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i) q += (z[i] - sh[i]) * (z[i] - sh[i]) / sigma2[i];
    const double dnd = static_cast<double>(d);
    const double want = -(nu + dnd) / 2 * (std::log1p(q / nu) - std::log1p(q / (2 * nu))) + dnd / 2 * std::log(2.0);
    CHECK(nll_dir(z, s, doubled, nu) - nll_dir(z, s, sigma2, nu) == doctest::Approx(want).epsilon(1e-10));
  });

  const Vector zero_var{1.0, 0.0};
  CHECK_THROWS_AS(nll_dir(a, b, zero_var, 2.0), DomainError);
}

TEST_CASE("nll_rad") {
  CHECK(nll_rad(0.0, 3.0) == 0.0);
  CHECK(nll_rad(1.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  for (double nu : {0.5, 1.0, 3.0, 20.0}) {
    for (double dr = -100.0; dr <= 100.0; dr += 0.01) {
      CHECK(std::abs(nll_rad_grad(dr, nu)) <= nll_rad_grad_bound(nu) * (1 + 1e-15));
      CHECK(nll_rad(dr, nu) == nll_rad(-dr, nu));
    }
    const auto peak = boost::math::tools::brent_find_minima([nu](double dr) { return -nll_rad_grad(dr, nu); }, 0.0,
                                                            10.0 * std::sqrt(nu), 52);
    CHECK(std::abs(peak.first - std::sqrt(nu)) < 1e-6);
    CHECK(std::abs(-peak.second - (nu + 1) / (2 * std::sqrt(nu))) < 1e-12);
  }
}

TEST_CASE("property: free lambda makes the radial loss strictly decreasing") {
  gen::for_all(55, 200, [](gen::Gen& g, int) {
    const double dr = g.signed_vec(1, 0.01, 50.0)[0];
    const double nu = g.real(0.2, 30.0);
    const double l1 = g.real(0.1, 10.0);
    const double l2 = l1 * g.real(1.01, 10.0);
    CHECK(nll_rad_lambda(dr, nu, l2) < nll_rad_lambda(dr, nu, l1));
  });
}

TEST_CASE("radial delta density") {
  for (double nu : {0.5, 3.0, 20.0}) {
    const auto r = quadrature_1d([nu](double x) { return std::exp(log_radial_delta_density(x, nu, 1.0)); },
                                 -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                                 1e-9);
    CHECK(std::abs(r.value - 1.0) < 1e-6);
    // The full variant differs from the training loss by a constant only.
    CHECK(nll_rad_full(1.7, nu) - nll_rad(1.7, nu) == doctest::Approx(nll_rad_full(0.0, nu)).epsilon(1e-12));
  }
}

TEST_CASE("kl_diag_gauss") {
  CHECK(kl_diag_gauss(Vector{0.0, 0.0}, Vector{1.0, 1.0}) == 0.0);
  CHECK(kl_diag_gauss(Vector{1.0, 0.0}, Vector{1.0, 1.0}) == 0.5);
  gen::for_all(57, 10000, [](gen::Gen& g, int) {
    const std::size_t d = g.size(1, 16);
    const double kl = kl_diag_gauss(g.signed_vec(d, 0.0, 3.0), g.vec(d, kVarFloor, 10.0));
    CHECK(kl >= -1e-12);
    CHECK(kl > 0.0);
  });
  PosteriorParams bad{{0.0}, {1e-7}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  PosteriorParams mismatch{{0.0, 1.0}, {1.0}};
  CHECK_THROWS_AS(mismatch.validate(), ShapeError);
}

TEST_CASE("log_diag_gauss") {
  const Vector x{0.0}, mu{0.0}, one{1.0};
  CHECK(log_diag_gauss(x, mu, one) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("gaussian_limit_gap") {
  CHECK(gaussian_limit_gap(4.0, 1e6, 8) < 1e-3);
  CHECK(gaussian_limit_gap(0.0, 3.0, 8) == 0.0);
  for (double q : {0.5, 4.0, 50.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double nu = 10.0; nu <= 1e6; nu *= 10.0) {
      const double gap = gaussian_limit_gap(q, nu, 8);
      CHECK(gap < prev);
      prev = gap;
    }
  }
  // Leading term of the gap: |D q / (2 nu) - q^2 / (4 nu)|.
  CHECK(gaussian_limit_gap(100.0, 1e6, 2) == doctest::Approx(2.4e-3).epsilon(1e-2));
}
