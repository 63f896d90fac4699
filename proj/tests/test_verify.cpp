#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "vje/distributions.hpp"
#include "vje/verify.hpp"

using namespace vje;
using namespace vje::verify;

TEST_CASE("make_result") {
  CHECK(make_result("a", 1e-7, 1e-6, "", "").passed());
  CHECK(!make_result("a", 1e-5, 1e-6, "", "").passed());
  CHECK(!make_result("a", std::nan(""), 1.0, "", "").passed());
  CHECK(status_name(Status::fail) == "fail");
}

TEST_CASE("fast checks pass and repeat exactly") {
  using Fn = CheckResult (*)();
  const Fn fns[] = {check_elliptical_t_normalization,
                    check_radial_factor_normalization,
                    check_radial_delta_normalization,
                    check_log_c_t_gaussian_limit,
                    check_bounded_influence,
                    check_elliptical_t_gradient_decay,
                    check_gaussian_limit,
                    check_kl_zero_at_prior,
                    check_op_gradients,
                    check_loss_gradients,
                    check_squared_error_recovery,
                    check_cosine_recovery,
                    check_ebm_identity,
                    check_gradient_pathways,
                    check_stop_gradient_both_branches,
                    check_lambda_degeneracy,
                    check_rad_symmetry,
                    check_kl_nonnegative};
  for (Fn f : fns) {
    const auto a = f();
    CAPTURE(a.name);
    CAPTURE(a.detail);
    CHECK(a.passed());
    CHECK(!a.covers.empty());
    const auto b = f();
    CHECK(a.measured == b.measured);
  }
}

TEST_CASE("mutations are caught") {
  // Sign-flipped radial loss: the influence peak disappears.
  CHECK(!check_bounded_influence([](double dr, double nu) { return -dist::nll_rad(dr, nu); }).passed());
  // Wrong scale: the sup moves away from (nu+1)/(2 sqrt nu).
  CHECK(!check_bounded_influence([](double dr, double nu) { return 2.0 * dist::nll_rad(dr, nu); }).passed());
  // Wrong width: the peak moves away from sqrt(nu).
  CHECK(!check_bounded_influence([](double dr, double nu) { return dist::nll_rad(dr / 2.0, nu); }).passed());

  // A density off by a constant breaks the energy identity.
  const auto energy = [](std::span<const double> z) { return 0.5 * z[0] * z[0]; };
  const auto good = [](std::span<const double> z) { return -0.5 * z[0] * z[0] - 0.5 * std::log(2 * std::numbers::pi); };
  const auto bad = [&](std::span<const double> z) { return good(z) + 0.01; };
  CHECK(check_ebm_identity(energy, 1, good, "gauss").passed());
  CHECK(!check_ebm_identity(energy, 1, bad, "gauss_shifted").passed());
}

TEST_CASE("full battery and report format") {
  const Report r = run_all();
  CHECK(r.checks.size() == 20);
  for (const auto& c : r.checks) {
    CAPTURE(c.name);
    CAPTURE(c.detail);
    CHECK(c.passed());
  }
  CHECK(r.all_passed());

  const std::string text = r.text();
  CHECK(text.find("20/20 checks passed") != std::string::npos);

  std::istringstream csv(r.csv());
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("#", 0) == 0);
  std::getline(csv, line);
  CHECK(line == "name,status,measured,tolerance");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 20);
}
