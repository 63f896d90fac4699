#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vje::verify {

enum class Status { pass, fail, skip };

std::string_view status_name(Status s);

struct CheckResult {
  std::string name;
  Status status = Status::pass;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
  std::string covers;  // the property or identity being exercised, in plain words

  bool passed() const noexcept { return status == Status::pass; }
};

// measured <= tolerance -> pass (NaN fails).
CheckResult make_result(std::string name, double measured, double tolerance, std::string detail, std::string covers);

// Normalization of densities by quadrature.
CheckResult check_elliptical_t_normalization();
CheckResult check_radial_factor_normalization();
CheckResult check_radial_delta_normalization();
CheckResult check_log_c_t_gaussian_limit();

// Bounded radial influence: sup |d l_rad / d dr| against (nu+1)/(2 sqrt nu), and its
// location against sqrt(nu). The radial loss is injectable so a mutated version can
// be shown to fail.
using RadialLoss = std::function<double(double delta_r, double nu)>;
CheckResult check_bounded_influence(const RadialLoss& loss);
CheckResult check_bounded_influence();
CheckResult check_elliptical_t_gradient_decay();

CheckResult check_gaussian_limit();
CheckResult check_kl_monte_carlo();
CheckResult check_kl_zero_at_prior();
CheckResult check_elbo_bound();

CheckResult check_op_gradients();
CheckResult check_loss_gradients();

CheckResult check_squared_error_recovery();
CheckResult check_cosine_recovery();

using Energy = std::function<double(std::span<const double> z)>;
// -log p = E + log Z, log Z by quadrature, for d <= 2.
CheckResult check_ebm_identity(const Energy& energy, std::size_t d, const std::function<double(std::span<const double>)>& log_density,
                               const std::string& name);
CheckResult check_ebm_identity();

CheckResult check_gradient_pathways();
CheckResult check_stop_gradient_both_branches();

CheckResult check_lambda_degeneracy();
CheckResult check_rad_symmetry();
CheckResult check_kl_nonnegative();

struct Report {
  std::vector<CheckResult> checks;

  bool all_passed() const;
  std::string text() const;
  std::string csv() const;
};

// Every check above, in a fixed order.
Report run_all();
// Writes <path> (text) and report.csv next to it.
void write_report(const Report& r, const std::filesystem::path& path);

}  // namespace vje::verify
