#include "vje/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "vje/autodiff.hpp"
#include "vje/csv.hpp"
#include "vje/distributions.hpp"
#include "vje/error.hpp"
#include "vje/gradcheck.hpp"
#include "vje/model.hpp"
#include "vje/numerics.hpp"
#include "vje/objective.hpp"

namespace vje::verify {

namespace {

constexpr std::uint64_t kSuiteSeed = 20251;
constexpr double kQuadTol = 1e-9;

Rng suite_rng(std::uint64_t tag) { return Rng(derive_seed(kSuiteSeed, {tag})); }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Vector uniform_vec(Rng& rng, std::size_t n, double lo, double hi) {
  Vector v(n);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

// Magnitude in [lo, hi] with a random sign.
Vector signed_vec(Rng& rng, std::size_t n, double lo, double hi) {
  Vector v = uniform_vec(rng, n, lo, hi);
  for (double& x : v) {
    if (rng.uniform() < 0.5) x = -x;
  }
  return v;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

// Same as make_result but forced to fail when a side predicate does not hold.
CheckResult result_with(std::string name, double measured, double tolerance, bool extra_ok, std::string detail,
                        std::string covers) {
  auto r = make_result(std::move(name), measured, tolerance, std::move(detail), std::move(covers));
  if (!extra_ok && r.status == Status::pass) r.status = Status::fail;
  return r;
}

// Integral of exp(log_f) over R^d, d in {1, 2}.
QuadratureResult integrate_density(const std::function<double(std::span<const double>)>& log_f, std::size_t d,
                                   double tol) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (d == 1) {
    return quadrature_1d(
        [&](double x) {
          const double z[1] = {x};
          return std::exp(log_f(z));
        },
        -inf, inf, tol);
  }
  if (d == 2) {
    return quadrature_2d(
        [&](double x, double y) {
          const double z[2] = {x, y};
          return std::exp(log_f(z));
        },
        -inf, inf, -inf, inf, tol);
  }
  throw InvalidDimension("integrate_density: d must be 1 or 2, got " + std::to_string(d));
}

ModelConfig small_model(std::size_t input, std::size_t hidden, std::size_t embed, std::size_t bottleneck,
                        std::size_t depth) {
  ModelConfig mc;
  mc.encoder.input_dim = input;
  mc.encoder.hidden_dims = {hidden};
  mc.encoder.embed_dim = embed;
  mc.inference.embed_dim = embed;
  mc.inference.bottleneck_dim = bottleneck;
  mc.inference.depth = depth;
  return mc;
}

bool is_encoder_param(const std::string& name) { return name.rfind("encoder.", 0) == 0; }

}  // namespace

std::string_view status_name(Status s) {
  switch (s) {
    case Status::pass:
      return "pass";
    case Status::fail:
      return "fail";
    case Status::skip:
      return "skip";
  }
  return "?";
}

CheckResult make_result(std::string name, double measured, double tolerance, std::string detail, std::string covers) {
  CheckResult r;
  r.name = std::move(name);
  r.measured = measured;
  r.tolerance = tolerance;
  r.status = (measured <= tolerance) ? Status::pass : Status::fail;
  r.detail = std::move(detail);
  r.covers = std::move(covers);
  return r;
}

CheckResult check_elliptical_t_normalization() {
  Rng rng = suite_rng(1);
  double worst = 0.0;
  std::string where;
  for (std::size_t d : {1u, 2u}) {
    for (double nu : {0.5, 1.0, 3.0, 20.0}) {
      const Vector s = signed_vec(rng, d, 0.0, 1.0);
      const Vector sigma2 = uniform_vec(rng, d, 0.3, 2.0);
      const auto r = integrate_density(
          [&](std::span<const double> z) { return -dist::nll_elliptical_t(z, s, nu, sigma2).nll; }, d, kQuadTol);
      const double err = std::abs(r.value - 1.0);
      if (err >= worst) {
        worst = err;
        where = "D=" + std::to_string(d) + " nu=" + fmt(nu);
      }
    }
  }
  return make_result("elliptical_t_normalization", worst, 1e-6, "max |integral - 1|, worst at " + where,
                     "elliptical Student-t density integrates to one");
}

CheckResult check_radial_factor_normalization() {
  struct Case {
    std::size_t d;
    double nu;
    double lambda;
  };
  std::vector<Case> cases;
  for (std::size_t d : {2u, 8u, 64u}) {
    for (double nu : {0.5, 3.0, 20.0}) cases.push_back({d, nu, 1.0});
  }
  cases.push_back({64, 20.0, 2.0});

  double worst = 0.0;
  std::string where;
  for (const auto& c : cases) {
    const auto r = quadrature_1d(
        [&](double rho) { return rho <= 0.0 ? 0.0 : std::exp(dist::log_radial_factor(rho, c.nu, c.lambda, c.d)); },
        0.0, std::numeric_limits<double>::infinity(), kQuadTol);
    const double err = std::abs(r.value - 1.0);
    if (err >= worst) {
      worst = err;
      where = "D=" + std::to_string(c.d) + " nu=" + fmt(c.nu) + " lambda=" + fmt(c.lambda);
    }
  }
  return make_result("radial_factor_normalization", worst, 1e-6, "max |integral - 1|, worst at " + where,
                     "radial factor of the isotropic t integrates to one over (0, inf)");
}

CheckResult check_radial_delta_normalization() {
  double worst = 0.0;
  std::string where;
  for (double nu : {0.5, 1.0, 3.0, 20.0}) {
    for (double lambda : {1.0, 2.0}) {
      const auto r = quadrature_1d([&](double x) { return std::exp(dist::log_radial_delta_density(x, nu, lambda)); },
                                   -std::numeric_limits<double>::infinity(),
                                   std::numeric_limits<double>::infinity(), kQuadTol);
      const double err = std::abs(r.value - 1.0);
      if (err >= worst) {
        worst = err;
        where = "nu=" + fmt(nu) + " lambda=" + fmt(lambda);
      }
    }
  }
  return make_result("radial_delta_normalization", worst, 1e-6, "max |integral - 1|, worst at " + where,
                     "1-D t kernel on the norm residual integrates to one");
}

CheckResult check_log_c_t_gaussian_limit() {
  const double got = dist::log_c_t(1e8, 1);
  const double want = -0.5 * std::log(2.0 * std::numbers::pi);
  return make_result("log_c_t_gaussian_limit", std::abs(got - want), 1e-6, "nu=1e8, D=1 against -log(2 pi)/2",
                     "t normalizer tends to the Gaussian one");
}

CheckResult check_bounded_influence(const RadialLoss& loss) {
  constexpr double h = 1e-5;
  double worst = 0.0;
  double worst_loc = 0.0;
  std::string where;
  for (double nu : {0.5, 1.0, 3.0, 20.0}) {
    // Signed derivative: a restoring loss pushes back, so it is positive for dr > 0.
    auto grad = [&](double dr) { return (loss(dr + h, nu) - loss(dr - h, nu)) / (2 * h); };
    const double hi = 10.0 * std::sqrt(nu) + 10.0;
    constexpr double step = 1e-3;
    double best = -std::numeric_limits<double>::infinity();
    double best_at = 0.0;
    for (double dr = 0.0; dr <= hi; dr += step) {
      const double g = grad(dr);
      if (g > best) {
        best = g;
        best_at = dr;
      }
    }
    const auto refined = boost::math::tools::brent_find_minima([&](double dr) { return -grad(dr); },
                                                               std::max(0.0, best_at - step), best_at + step, 40);
    const double sup = std::max(best, -refined.second);
    const double at = (-refined.second >= best) ? refined.first : best_at;
    const double bound = dist::nll_rad_grad_bound(nu);
    const double err = std::abs(sup - bound);
    const double loc = std::abs(at - std::sqrt(nu));
    if (err >= worst) {
      worst = err;
      where = "nu=" + fmt(nu) + " sup=" + fmt(sup) + " bound=" + fmt(bound);
    }
    worst_loc = std::max(worst_loc, loc);
  }
  return result_with("bounded_influence", worst, 1e-6, worst_loc < 1e-3,
                     "max |sup d l_rad/d dr - (nu+1)/(2 sqrt nu)|, worst at " + where +
                         "; argmax off sqrt(nu) by " + fmt(worst_loc),
                     "radial gradient is bounded and peaks at |dr| = sqrt(nu)");
}

CheckResult check_bounded_influence() {
  return check_bounded_influence([](double dr, double nu) { return dist::nll_rad(dr, nu); });
}

CheckResult check_elliptical_t_gradient_decay() {
  double worst = 0.0;
  std::string where;
  for (std::size_t d : {1u, 4u, 16u}) {
    for (double nu : {0.5, 1.0, 3.0, 20.0}) {
      const Vector s(d, 0.0);
      auto grad_norm = [&](double r) {
        Vector z(d, 0.0);
        z[0] = r;
        return norm2(dist::nll_isotropic_t(z, s, nu, 1.0).grad_z);
      };
      double peak = 0.0;
      for (double r = 0.0; r <= 100.0; r += 1e-3) peak = std::max(peak, grad_norm(r));
      const double ratio = grad_norm(1e6) / peak;
      if (ratio >= worst) {
        worst = ratio;
        where = "D=" + std::to_string(d) + " nu=" + fmt(nu);
      }
    }
  }
  return make_result("elliptical_t_gradient_decay", worst, 1e-3,
                     "max ||grad|| at residual 1e6 over its peak, worst at " + where,
                     "t gradient vanishes for gross outliers");
}

CheckResult check_gaussian_limit() {
  double worst = 0.0;
  bool monotone = true;
  for (std::size_t d : {2u, 8u, 16u}) {
    for (double q : {0.5, 1.0, 2.0, 4.0}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double nu = 10.0; nu <= 1e6; nu *= 10.0) {
        const double gap = dist::gaussian_limit_gap(q, nu, d);
        if (!(gap < prev)) monotone = false;
        prev = gap;
      }
      worst = std::max(worst, prev);
    }
  }
  return result_with("gaussian_limit", worst, 1e-3, monotone,
                     std::string("max gap at nu=1e6 for q <= 4; gap decreasing in nu: ") + (monotone ? "yes" : "no"),
                     "directional t term tends to Q/2");
}

CheckResult check_kl_monte_carlo() {
  constexpr std::size_t kSamples = 1'000'000;
  Rng rng = suite_rng(7);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t d = 1 + rng.uniform_index(8);
    dist::PosteriorParams q{signed_vec(rng, d, 0.0, 1.5), uniform_vec(rng, d, 0.2, 3.0)};
    const Vector zero(d, 0.0);
    const Vector one(d, 1.0);
    double mean = 0.0;
    double m2 = 0.0;
    Vector s(d);
    for (std::size_t k = 0; k < kSamples; ++k) {
      for (std::size_t i = 0; i < d; ++i) s[i] = q.mu[i] + std::sqrt(q.sigma2[i]) * rng.standard_normal();
      const double x = dist::log_diag_gauss(s, q.mu, q.sigma2) - dist::log_diag_gauss(s, zero, one);
      const double delta = x - mean;
      mean += delta / static_cast<double>(k + 1);
      m2 += delta * (x - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(kSamples - 1) / static_cast<double>(kSamples));
    worst = std::max(worst, std::abs(dist::kl_diag_gauss(q) - mean) / se);
  }
  return make_result("kl_monte_carlo", worst, 3.0,
                     "max |analytic - MC| in standard errors, 20 posteriors, 1e6 samples each",
                     "closed-form Gaussian KL");
}

CheckResult check_kl_zero_at_prior() {
  double worst = 0.0;
  for (std::size_t d : {1u, 2u, 8u, 16u, 64u}) {
    worst = std::max(worst, std::abs(dist::kl_diag_gauss(Vector(d, 0.0), Vector(d, 1.0))));
  }
  return make_result("kl_zero_at_prior", worst, 0.0, "KL(N(0, I) || N(0, I)), exact", "KL vanishes at the prior");
}

CheckResult check_elbo_bound() {
  Rng rng = suite_rng(9);
  const ModelConfig mc = small_model(2, 4, 2, 1, 2);
  VjeConfig vc;
  vc.embed_dim = 2;
  double worst = -std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < 10; ++inst) {
    const Model model = Model::initialized(mc, rng);
    vc.nu = uniform(rng, 1.0, 10.0);
    const Vector z_src = signed_vec(rng, 2, 0.5, 2.0);
    const Vector z_tgt = signed_vec(rng, 2, 0.5, 2.0);
    const auto elbo = oneway_elbo(z_src, z_tgt, model, vc, rng, 100'000);
    const auto lm = log_marginal_is(model.infer(z_src), z_tgt, vc.nu, rng, 100'000);
    const double se = std::hypot(elbo.std_error, lm.std_error);
    worst = std::max(worst, (elbo.value - lm.value) / se);
  }
  return make_result("elbo_bound", worst, 3.0,
                     "max (ELBO - IS log-marginal) in standard errors, 10 instances, D=2, 1e5 draws",
                     "one-way ELBO lower-bounds the conditional log-marginal");
}

CheckResult check_op_gradients() {
  using ad::Op;
  Rng rng = suite_rng(11);
  const Op ops[] = {Op::add,     Op::sub,      Op::mul,  Op::div,   Op::matvec, Op::relu,
                    Op::layernorm, Op::softplus, Op::log,  Op::log1p, Op::exp,    Op::sqrt,
                    Op::sum,     Op::dot,      Op::l2norm, Op::normalize, Op::scalar_pow};
  double worst = 0.0;
  std::string where;
  for (Op op : ops) {
    for (int inst = 0; inst < 10; ++inst) {
      const std::size_t n = 1 + rng.uniform_index(16);
      std::vector<Tensor> inputs;
      double attr = 0.0;
      // Odd instances of the binary elementwise ops broadcast a scalar operand.
      const bool scalar_rhs = (inst % 2 == 1);
      switch (op) {
        case Op::add:
        case Op::sub:
        case Op::mul:
          inputs = {Tensor::vector(signed_vec(rng, n, 0.1, 2.0)),
                    scalar_rhs ? Tensor::scalar(uniform(rng, -2.0, 2.0)) : Tensor::vector(signed_vec(rng, n, 0.1, 2.0))};
          break;
        case Op::div:
          inputs = {Tensor::vector(signed_vec(rng, n, 0.1, 2.0)),
                    scalar_rhs ? Tensor::scalar(uniform(rng, 0.5, 2.0)) : Tensor::vector(signed_vec(rng, n, 0.5, 2.0))};
          break;
        case Op::matvec: {
          const std::size_t m = 1 + rng.uniform_index(16);
          inputs = {Tensor::matrix(m, n, signed_vec(rng, m * n, 0.0, 1.0)), Tensor::vector(signed_vec(rng, n, 0.0, 1.0))};
          break;
        }
        case Op::relu:
          inputs = {Tensor::vector(signed_vec(rng, n, 0.01, 2.0))};
          break;
        case Op::layernorm:
          inputs = {Tensor::vector(signed_vec(rng, n + 1, 0.0, 2.0))};
          attr = ad::kLayerNormEps;
          break;
        case Op::log:
        case Op::sqrt:
          inputs = {Tensor::vector(uniform_vec(rng, n, 0.1, 3.0))};
          break;
        case Op::log1p:
          inputs = {Tensor::vector(uniform_vec(rng, n, -0.5, 3.0))};
          break;
        case Op::scalar_pow: {
          inputs = {Tensor::vector(uniform_vec(rng, n, 0.2, 2.0))};
          const double exps[] = {-1.5, 0.5, 2.0, 3.0};
          attr = exps[rng.uniform_index(4)];
          break;
        }
        case Op::normalize:
          inputs = {Tensor::vector(signed_vec(rng, n, 0.1, 2.0))};
          attr = dist::kEpsNorm;
          break;
        case Op::dot:
          inputs = {Tensor::vector(signed_vec(rng, n, 0.0, 2.0)), Tensor::vector(signed_vec(rng, n, 0.0, 2.0))};
          break;
        default:
          inputs = {Tensor::vector(signed_vec(rng, n, 0.1, 2.0))};
          break;
      }
      // Contract vector outputs against fixed weights to get a scalar.
      const Vector weights = signed_vec(rng, 32, 0.5, 1.5);
      auto f = [&](ad::Tape& tape, const std::vector<ad::Var>& xs) {
        ad::Var out = ad::apply(op, xs, attr);
        if (out.value().rank() == 0) return out;
        const std::size_t len = out.value().size();
        return ad::dot(out, tape.constant(Tensor::vector(Vector(weights.begin(), weights.begin() + len))));
      };
      const auto r = gradcheck(f, inputs);
      if (r.max_error >= worst) {
        worst = r.max_error;
        where = std::string(ad::op_name(op)) + " " + r.worst;
      }
    }
  }
  return make_result("op_gradients", worst, 1e-4, "max relative error, 10 instances per op, worst at " + where,
                     "reverse-mode rule of every op");
}

CheckResult check_loss_gradients() {
  Rng rng = suite_rng(13);
  const ModelConfig mc = small_model(6, 8, 8, 4, 2);
  VjeConfig vc;
  vc.embed_dim = 8;
  vc.nu = 3.0;
  vc.beta = 1.0;
  double worst = 0.0;
  std::string where;
  for (int inst = 0; inst < 10; ++inst) {
    Model model = Model::initialized(mc, rng);
    const Vector x1 = standard_normal_vec(rng, 6);
    const Vector x2 = standard_normal_vec(rng, 6);
    const StepNoise noise = StepNoise::draw(rng, 8, 1);
    const auto r = gradcheck_model(
        [&](ad::Tape& tape, const Model& m, const BoundParams& p) {
          // Central differences perturb both branches, so the reference is the attached target.
          return vje_step_loss(tape, m.encode(tape, p, x1), m.encode(tape, p, x2), m, p, vc, noise,
                               TargetMode::attached)
              .total;
        },
        model);
    if (r.max_error >= worst) {
      worst = r.max_error;
      where = r.worst;
    }
  }
  return make_result("loss_gradients", worst, 1e-4,
                     "max relative error over all parameters, 10 instances, D=8, worst at " + where,
                     "gradient of the full symmetric training loss");
}

CheckResult check_squared_error_recovery() {
  Rng rng = suite_rng(17);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t d = 1 + rng.uniform_index(16);
    const double lambda = (inst % 2 == 0) ? 1.0 : 2.0;
    const Vector z = signed_vec(rng, d, 0.0, 3.0);
    const Vector mu = signed_vec(rng, d, 0.0, 3.0);
    const Vector var(d, lambda);
    // Gaussian NLL with a point posterior and no KL, offset so a zero residual costs zero.
    const double nll = -dist::log_diag_gauss(z, mu, var) + dist::log_diag_gauss(mu, mu, var);
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) sq += (z[i] - mu[i]) * (z[i] - mu[i]);
    worst = std::max(worst, std::abs(nll - sq / (2 * lambda)));
  }
  return make_result("squared_error_recovery", worst, 1e-10, "max |NLL - ||z - mu||^2 / (2 lambda)|, 100 instances",
                     "Gaussian point-posterior limit is a squared-error loss");
}

CheckResult check_cosine_recovery() {
  Rng rng = suite_rng(19);
  constexpr std::size_t d = 16;
  const Vector ones(d, 1.0);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const Vector z = safe_normalize(standard_normal_vec(rng, d), 1e-12);
    // The last instance is antipodal.
    Vector mu = safe_normalize(standard_normal_vec(rng, d), 1e-12);
    if (inst == 99) {
      for (std::size_t i = 0; i < d; ++i) mu[i] = -z[i];
    }
    double cos = 0.0;
    for (std::size_t i = 0; i < d; ++i) cos += z[i] * mu[i];
    worst = std::max(worst, std::abs(dist::nll_dir(z, mu, ones, 1e8) - (1.0 - cos)));
  }
  return make_result("cosine_recovery", worst, 1e-3, "max |l_dir(nu=1e8, sigma2=1) - (1 - cos)|, 100 pairs, D=16",
                     "directional term reduces to cosine alignment");
}

CheckResult check_ebm_identity(const Energy& energy, std::size_t d,
                               const std::function<double(std::span<const double>)>& log_density,
                               const std::string& name) {
  const auto z = integrate_density([&](std::span<const double> x) { return -energy(x); }, d, 1e-10);
  const double log_z = std::log(z.value);
  Rng rng = suite_rng(23 + d);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Vector x = signed_vec(rng, d, 0.0, 5.0);
    worst = std::max(worst, std::abs(energy(x) + log_z + log_density(x)));
  }
  return make_result("ebm_identity_" + name, worst, 1e-5, "max |E + log Z - (-log p)| over 50 points, D=" +
                                                              std::to_string(d),
                     "negative log-likelihood equals energy plus log partition function");
}

CheckResult check_ebm_identity() {
  // Isotropic d=1 with lambda=2 and diagonal d=2; the energy keeps only the kernel.
  const double nu1 = 3.0;
  const double lambda = 2.0;
  const Vector s1{0.4};
  auto e1 = [&](std::span<const double> z) {
    const double r = z[0] - s1[0];
    return 0.5 * (nu1 + 1.0) * std::log1p(r * r / (nu1 * lambda));
  };
  auto lp1 = [&](std::span<const double> z) { return -dist::nll_isotropic_t(z, s1, nu1, lambda).nll; };
  auto r1 = check_ebm_identity(e1, 1, lp1, "d1");

  const double nu2 = 1.0;
  const Vector s2{0.3, -0.7};
  const Vector sig2{0.8, 1.5};
  auto e2 = [&](std::span<const double> z) {
    double q = 0.0;
    for (std::size_t i = 0; i < 2; ++i) q += (z[i] - s2[i]) * (z[i] - s2[i]) / sig2[i];
    return 0.5 * (nu2 + 2.0) * std::log1p(q / nu2);
  };
  auto lp2 = [&](std::span<const double> z) { return -dist::nll_elliptical_t(z, s2, nu2, sig2).nll; };
  auto r2 = check_ebm_identity(e2, 2, lp2, "d2");

  // Closed-form log Z for the d=1 case.
  const double lz1 = std::log(integrate_density([&](std::span<const double> z) { return -e1(z); }, 1, 1e-10).value);
  const double closed = -dist::log_c_t(nu1, 1) + 0.5 * std::log(lambda);
  const double lz_err = std::abs(lz1 - closed);

  const double worst = std::max(r1.measured, r2.measured);
  return result_with("ebm_identity", worst, 1e-5, lz_err < 1e-6,
                     "max identity deviation over d=1 (nu=3, lambda=2) and d=2 (nu=1); d=1 log Z off closed form by " +
                         fmt(lz_err),
                     "negative log-likelihood equals energy plus log partition function");
}

namespace {

struct PathwayGrads {
  ad::GradientMap grads;
  Vector target;
  Vector s;
  Vector sigma2;
};

// One-direction NLL from x_src to x_tgt through a shared encoder.
PathwayGrads one_direction(const Model& model, const Vector& x_src, const Vector& x_tgt, const Vector& eps,
                           double nu, TargetMode mode) {
  ad::Tape tape;
  const auto p = model.bind(tape);
  const auto z_i = model.encode(tape, p, x_src);
  const auto z_j = model.encode(tape, p, x_tgt);
  const auto q = model.infer(tape, p, z_i);
  const auto s = sample_latent(tape, q, eps);
  ad::Var target = z_j;
  if (mode == TargetMode::detached) target = ad::stop_gradient(z_j);
  if (mode == TargetMode::constant) target = tape.constant(z_j.value());
  const auto loss = tape_nll_dir(target, s, q.sigma2, nu, dist::kEpsNorm) + tape_nll_rad(target, s, nu);
  PathwayGrads out;
  out.grads = tape.backward(loss);
  out.target = z_j.value().values();
  out.s = s.value().values();
  out.sigma2 = q.sigma2.value().values();
  return out;
}

}  // namespace

CheckResult check_gradient_pathways() {
  Rng rng = suite_rng(29);
  constexpr std::size_t d = 8;
  constexpr double nu = 3.0;
  const ModelConfig mc = small_model(6, 10, d, 4, 2);
  const Model model = Model::initialized(mc, rng);
  const Vector x1 = standard_normal_vec(rng, 6);
  const Vector x2 = standard_normal_vec(rng, 6);
  const Vector eps = standard_normal_vec(rng, d);

  const auto detached = one_direction(model, x1, x2, eps, nu, TargetMode::detached);
  const auto constant = one_direction(model, x1, x2, eps, nu, TargetMode::constant);
  const auto attached = one_direction(model, x1, x2, eps, nu, TargetMode::attached);

  // (i) detached == constant leaf, bit for bit.
  bool identical = detached.grads.size() == constant.grads.size();
  for (const auto& [name, g] : detached.grads) {
    const auto it = constant.grads.find(name);
    if (it == constant.grads.end() || it->second.values() != g.values()) identical = false;
  }

  // (ii) attached - detached == J^T g, g the finite-difference gradient of the NLL in z_j.
  auto nll_of_target = [&](std::span<const double> zj) {
    const double dr = norm2(zj) - norm2(detached.s);
    return dist::nll_dir(zj, detached.s, detached.sigma2, nu) + dist::nll_rad(dr, nu);
  };
  constexpr double h = 1e-6;
  Vector g(d);
  Vector zj = detached.target;
  for (std::size_t i = 0; i < d; ++i) {
    const double keep = zj[i];
    zj[i] = keep + h;
    const double up = nll_of_target(zj);
    zj[i] = keep - h;
    const double down = nll_of_target(zj);
    zj[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  ad::Tape tape;
  const auto p = model.bind(tape);
  const auto z_j = model.encode(tape, p, x2);
  const auto chained = tape.backward(ad::dot(z_j, tape.constant(Tensor::vector(g))));

  double diff2 = 0.0;
  double ref2 = 0.0;
  for (const auto& [name, ga] : attached.grads) {
    const auto& gd = detached.grads.at(name).values();
    const auto& gc = chained.at(name).values();
    for (std::size_t k = 0; k < gc.size(); ++k) {
      const double e = (ga.values()[k] - gd[k]) - gc[k];
      diff2 += e * e;
      ref2 += gc[k] * gc[k];
    }
  }
  const double rel = std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-300);
  return result_with("gradient_pathways", rel, 1e-3, identical,
                     std::string("||(attached - detached) - J^T g|| / ||J^T g||; detached equals constant leaf bitwise: ") +
                         (identical ? "yes" : "no"),
                     "target pathway splits off exactly under stop-gradient");
}

CheckResult check_stop_gradient_both_branches() {
  Rng rng = suite_rng(31);
  constexpr std::size_t d = 8;
  const ModelConfig mc = small_model(6, 10, d, 4, 2);
  const Model model = Model::initialized(mc, rng);
  const Vector x1 = standard_normal_vec(rng, 6);
  const Vector x2 = standard_normal_vec(rng, 6);
  const StepNoise noise = StepNoise::draw(rng, d, 1);
  VjeConfig vc;
  vc.embed_dim = d;

  // Both encoder outputs cut before anything reads them: every encoder adjoint
  // must come out exactly zero while the inference net still learns.
  double enc_max = 0.0;
  double inf_max = 0.0;
  {
    ad::Tape tape;
    const auto p = model.bind(tape);
    const auto z1 = ad::stop_gradient(model.encode(tape, p, x1));
    const auto z2 = ad::stop_gradient(model.encode(tape, p, x2));
    const auto grads = tape.backward(vje_step_loss(tape, z1, z2, model, p, vc, noise).total);
    for (const auto& [name, g] : grads) {
      double& slot = is_encoder_param(name) ? enc_max : inf_max;
      for (double v : g.values()) slot = std::max(slot, std::abs(v));
    }
  }

  // Encoder outputs as leaves, NLL only: the adjoint of each z reaches it through
  // the source path alone. Adding the KL keeps it nonzero.
  double nll_tgt = 0.0;
  double kl_adj = 0.0;
  {
    ad::Tape tape;
    const auto p = model.bind(tape);
    const auto z1 = tape.variable(model.encode(tape, p, x1).value());
    const auto z2 = tape.variable(model.encode(tape, p, x2).value());
    const auto q1 = model.infer(tape, p, z1);
    const auto s1 = sample_latent(tape, q1, noise.eps1[0]);
    const auto nll = tape_nll_dir(ad::stop_gradient(z2), s1, q1.sigma2, vc.nu, vc.eps_norm) +
                     tape_nll_rad(ad::stop_gradient(z2), s1, vc.nu);
    tape.backward(nll);
    const Tensor g_nll = tape.grad(z2);
    for (double v : g_nll.values()) nll_tgt = std::max(nll_tgt, std::abs(v));
    const auto q2 = model.infer(tape, p, z2);
    tape.backward(nll + tape_kl(q2.mu, q2.sigma2));
    const Tensor g_kl = tape.grad(z2);
    for (double v : g_kl.values()) kl_adj = std::max(kl_adj, std::abs(v));
  }

  const double measured = std::max(enc_max, nll_tgt);
  return result_with("stop_gradient_both_branches", measured, 0.0, inf_max > 0.0 && kl_adj > 0.0,
                     "max |encoder adjoint| with both branches cut and max |target adjoint| from the NLL (both must be 0); "
                     "inference adjoint " + fmt(inf_max) + ", KL adjoint on target " + fmt(kl_adj),
                     "stop-gradient on the observation keeps likelihood gradients off the target");
}

CheckResult check_lambda_degeneracy() {
  double worst = -std::numeric_limits<double>::infinity();
  for (double nu : {0.5, 3.0, 20.0}) {
    for (double dr : {0.1, 1.0, 5.0, 50.0}) {
      double prev = dist::nll_rad_lambda(dr, nu, 1e-3);
      for (double lambda = 1e-2; lambda <= 1e6; lambda *= 10.0) {
        const double cur = dist::nll_rad_lambda(dr, nu, lambda);
        worst = std::max(worst, cur - prev);
        prev = cur;
      }
    }
  }
  return make_result("lambda_degeneracy", worst, 0.0,
                     "max increase of the radial loss over a growing lambda grid (must not increase)",
                     "free radial scale would drive the radial loss to zero");
}

CheckResult check_rad_symmetry() {
  double worst = 0.0;
  for (double nu : {0.5, 1.0, 3.0, 20.0}) {
    for (double dr = 0.0; dr <= 20.0; dr += 0.37) {
      worst = std::max(worst, std::abs(dist::nll_rad(dr, nu) - dist::nll_rad(-dr, nu)));
      worst = std::max(worst, std::abs(dist::nll_rad_grad(dr, nu) + dist::nll_rad_grad(-dr, nu)));
    }
  }
  return make_result("rad_symmetry", worst, 0.0, "max |l(dr) - l(-dr)| and |g(dr) + g(-dr)|",
                     "radial loss is even in the norm residual");
}

CheckResult check_kl_nonnegative() {
  Rng rng = suite_rng(37);
  double worst = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t d = 1 + rng.uniform_index(16);
    const double kl = dist::kl_diag_gauss(signed_vec(rng, d, 0.0, 3.0), uniform_vec(rng, d, 1e-6, 10.0));
    worst = std::max(worst, -kl);
  }
  return make_result("kl_nonnegative", worst, 0.0, "max(-KL) over 1000 random posteriors", "KL is non-negative");
}

bool Report::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status != Status::fail; });
}

std::string Report::text() const {
  std::ostringstream os;
  std::size_t failed = 0;
  for (const auto& c : checks) {
    os << (c.status == Status::pass ? "PASS" : c.status == Status::fail ? "FAIL" : "SKIP") << "  " << c.name
       << "  measured=" << fmt_double(c.measured) << " tol=" << fmt_double(c.tolerance) << "\n"
       << "      " << c.detail << "\n"
       << "      covers: " << c.covers << "\n";
    if (c.status == Status::fail) ++failed;
  }
  os << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  return os.str();
}

std::string Report::csv() const {
  CsvTable t(kSuiteSeed, {"name", "status", "measured", "tolerance"});
  for (const auto& c : checks) {
    t.add_row({c.name, std::string(status_name(c.status)), fmt_double(c.measured), fmt_double(c.tolerance)});
  }
  return t.str();
}

Report run_all() {
  using Check = CheckResult (*)();
  const std::pair<const char*, Check> all[] = {
      {"elliptical_t_normalization", &check_elliptical_t_normalization},
      {"radial_factor_normalization", &check_radial_factor_normalization},
      {"radial_delta_normalization", &check_radial_delta_normalization},
      {"log_c_t_gaussian_limit", &check_log_c_t_gaussian_limit},
      {"bounded_influence", static_cast<Check>(&check_bounded_influence)},
      {"elliptical_t_gradient_decay", &check_elliptical_t_gradient_decay},
      {"gaussian_limit", &check_gaussian_limit},
      {"kl_monte_carlo", &check_kl_monte_carlo},
      {"kl_zero_at_prior", &check_kl_zero_at_prior},
      {"elbo_bound", &check_elbo_bound},
      {"op_gradients", &check_op_gradients},
      {"loss_gradients", &check_loss_gradients},
      {"squared_error_recovery", &check_squared_error_recovery},
      {"cosine_recovery", &check_cosine_recovery},
      {"ebm_identity", static_cast<Check>(&check_ebm_identity)},
      {"gradient_pathways", &check_gradient_pathways},
      {"stop_gradient_both_branches", &check_stop_gradient_both_branches},
      {"lambda_degeneracy", &check_lambda_degeneracy},
      {"rad_symmetry", &check_rad_symmetry},
      {"kl_nonnegative", &check_kl_nonnegative},
  };
  Report r;
  for (const auto& [name, check] : all) {
    try {
      r.checks.push_back(check());
    } catch (const Error& e) {
      CheckResult failed;
      failed.name = name;
      failed.status = Status::fail;
      failed.measured = std::numeric_limits<double>::quiet_NaN();
      failed.detail = std::string("threw: ") + e.what();
      r.checks.push_back(std::move(failed));
    }
  }
  return r;
}

void write_report(const Report& r, const std::filesystem::path& path) {
  write_text_file(path, r.text());
  write_text_file(path.parent_path() / "report.csv", r.csv());
}

}  // namespace vje::verify
