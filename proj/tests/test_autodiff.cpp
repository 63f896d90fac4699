#include <doctest.h>

#include <cmath>
#include <string>

#include "gen.hpp"
#include "vje/autodiff.hpp"
#include "vje/error.hpp"
#include "vje/gradcheck.hpp"
#include "vje/objective.hpp"

using namespace vje;
namespace ad = vje::ad;

namespace {

Tensor vec(Vector v) { return Tensor::vector(std::move(v)); }

}  // namespace

TEST_CASE("forward values") {
  ad::Tape t;
  auto a = t.constant(vec({1, 2}));
  auto b = t.constant(vec({3, 4}));
  CHECK((a + b).value().values() == Vector{4, 6});
  CHECK(ad::l2norm(b).item() == 5.0);
  CHECK(ad::dot(a, b).item() == 11.0);

  const auto ln = ad::layernorm(t.constant(vec({2, 2, 2})));
  for (double x : ln.value().values()) CHECK(x == 0.0);

  const auto n = ad::normalize(b, 1e-6);
  CHECK(n.value()[0] == doctest::Approx(0.6));
  CHECK(n.value()[1] == doctest::Approx(0.8));
}

TEST_CASE("shape mismatch names the op and both shapes") {
  ad::Tape t;
  auto a = t.constant(vec({1, 2}));
  auto b = t.constant(vec({1, 2, 3}));
  try {
    (void)ad::add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("[2]") != std::string::npos);
    CHECK(msg.find("[3]") != std::string::npos);
  }
  auto w = t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  CHECK_THROWS_AS((void)ad::matvec(w, b), ShapeError);
}

TEST_CASE("backward on simple graphs") {
  ad::Tape t;
  auto x = t.variable(Tensor::scalar(3.0), "x");
  auto g = t.backward(x * x);
  CHECK(g.at("x").item() == 6.0);

  // Non-scalar loss is rejected.
  auto v = t.variable(vec({1, 2}), "v");
  CHECK_THROWS_AS(t.backward(v), ShapeError);

  // Unreachable parameters come back as exact zeros.
  auto u = t.variable(vec({5, 5}), "unused");
  auto g2 = t.backward(ad::sum(v));
  CHECK(g2.at("unused").values() == Vector{0, 0});
  CHECK(g2.at("v").values() == Vector{1, 1});
  (void)u;
}

TEST_CASE("stop_gradient") {
  ad::Tape t;
  auto a = t.variable(vec({1, 2, 3}), "a");
  auto b = t.variable(vec({4, 5, 6}), "b");
  auto g = t.backward(ad::dot(ad::stop_gradient(a), b));
  CHECK(g.at("a").values() == Vector{0, 0, 0});
  CHECK(g.at("b").values() == Vector{1, 2, 3});
  CHECK(ad::stop_gradient(a).value().values() == a.value().values());
}

TEST_CASE("property: stop_gradient zeroes exactly the ancestors reachable only through it") {
  gen::for_all(21, 30, [](gen::Gen& g, int) {
    const std::size_t n = g.size(1, 12);
    const Vector av = g.signed_vec(n, 0.1, 2.0);
    const Vector bv = g.signed_vec(n, 0.1, 2.0);
    // f = <a * b, b> + sum(a): a reaches the loss twice, b through both factors.
    auto build = [&](bool cut) {
      ad::Tape t;
      auto a = t.variable(vec(av), "a");
      auto b = t.variable(vec(bv), "b");
      auto prod = a * b;
      auto f = ad::dot(cut ? ad::stop_gradient(prod) : prod, b) + ad::sum(a);
      return std::pair{f.item(), t.backward(f)};
    };
    const auto [f0, g0] = build(false);
    const auto [f1, g1] = build(true);
    CHECK(f0 == f1);
    for (std::size_t i = 0; i < n; ++i) {
      // a keeps only the sum(a) path, b keeps only its direct dot slot.
      CHECK(g1.at("a")[i] == 1.0);
      CHECK(g1.at("b")[i] == av[i] * bv[i]);
      CHECK(g0.at("a")[i] != g1.at("a")[i]);
    }
  });
}

TEST_CASE("normalize Jacobian is the tangent projection") {
  gen::for_all(23, 20, [](gen::Gen& g, int) {
    const std::size_t n = g.size(2, 16);
    const Vector z = g.signed_vec(n, 0.1, 2.0);
    const Vector u = g.normal(n);
    ad::Tape t;
    auto zv = t.variable(vec(z), "z");
    auto grads = t.backward(ad::dot(ad::normalize(zv, 1e-6), t.constant(vec(u))));
    const double r = norm2(z);
    double zu = 0.0;
    for (std::size_t i = 0; i < n; ++i) zu += z[i] * u[i];
    for (std::size_t i = 0; i < n; ++i) {
      // (I - z_hat z_hat^T) u / ||z||
      const double want = (u[i] - z[i] * zu / (r * r)) / r;
      CHECK(std::abs(grads.at("z")[i] - want) < 1e-8);
    }
  });
}

TEST_CASE("property: every op matches central differences") {
  using ad::Op;
  const Op ops[] = {Op::add,  Op::sub,  Op::mul, Op::div,  Op::matvec, Op::relu,  Op::layernorm, Op::softplus,
                    Op::log,  Op::log1p, Op::exp, Op::sqrt, Op::sum,    Op::dot,   Op::l2norm,    Op::normalize,
                    Op::scalar_pow};
  for (Op op : ops) {
    CAPTURE(ad::op_name(op));
    gen::for_all(31 + static_cast<std::uint64_t>(op), 10, [&](gen::Gen& g, int trial) {
      const std::size_t n = g.size(1, 16);
      std::vector<Tensor> in;
      double attr = 0.0;
      switch (op) {
        case Op::div:
          in = {vec(g.signed_vec(n, 0.1, 2.0)),
                trial % 2 ? Tensor::scalar(g.real(0.5, 2.0)) : vec(g.signed_vec(n, 0.5, 2.0))};
          break;
        case Op::add:
        case Op::sub:
        case Op::mul:
          in = {vec(g.signed_vec(n, 0.1, 2.0)), trial % 2 ? Tensor::scalar(g.real(-2, 2)) : vec(g.signed_vec(n, 0.1, 2.0))};
          break;
        case Op::dot:
          in = {vec(g.signed_vec(n, 0.1, 2.0)), vec(g.signed_vec(n, 0.1, 2.0))};
          break;
        case Op::matvec: {
          const std::size_t m = g.size(1, 16);
          in = {Tensor::matrix(m, n, g.signed_vec(m * n, 0.0, 1.0)), vec(g.signed_vec(n, 0.0, 1.0))};
          break;
        }
        case Op::relu:
          in = {vec(g.signed_vec(n, 0.01, 2.0))};
          break;
        case Op::layernorm:
          in = {vec(g.signed_vec(n + 1, 0.0, 2.0))};
          attr = ad::kLayerNormEps;
          break;
        case Op::log:
        case Op::sqrt:
          in = {vec(g.vec(n, 0.1, 3.0))};
          break;
        case Op::log1p:
          in = {vec(g.vec(n, -0.5, 3.0))};
          break;
        case Op::scalar_pow:
          in = {vec(g.vec(n, 0.2, 2.0))};
          attr = g.real(-2.0, 3.0);
          break;
        case Op::normalize:
          in = {vec(g.signed_vec(n, 0.1, 2.0))};
          attr = 1e-6;
          break;
        default:
          in = {vec(g.signed_vec(n, 0.1, 2.0))};
      }
      const Vector w = g.signed_vec(32, 0.5, 1.5);
      auto f = [&](ad::Tape& t, const std::vector<ad::Var>& xs) {
        auto out = ad::apply(op, xs, attr);
        if (out.value().rank() == 0) return out;
        return ad::dot(out, t.constant(vec(Vector(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(out.value().size())))));
      };
      const auto r = gradcheck(f, in);
      CHECK_MESSAGE(r.pass, r.worst, " error ", r.max_error);
    });
  }
}

TEST_CASE("directional and radial terms against their closed-form gradients") {
  gen::for_all(41, 10, [](gen::Gen& g, int) {
    constexpr std::size_t d = 6;
    const std::vector<Tensor> in = {vec(g.signed_vec(d, 0.1, 2.0)), vec(g.signed_vec(d, 0.1, 2.0)),
                                    vec(g.vec(d, 0.2, 2.0))};
    const auto r = gradcheck(
        [](ad::Tape&, const std::vector<ad::Var>& x) { return tape_nll_dir(x[0], x[1], x[2], 3.0, 1e-6); }, in);
    CHECK(r.pass);
  });
  // d l_rad / d dr = (nu+1)/nu * dr / (1 + dr^2/nu), while the target stays on the +x side.
  for (double dr = -2.75; dr <= 6.0; dr += 0.25) {
    const double nu = 3.0;
    ad::Tape t;
    Vector tgt{3.0 + dr, 0.0}, s{3.0, 0.0};
    auto tv = t.variable(vec(tgt), "t");
    auto sv = t.constant(vec(s));
    auto g = t.backward(tape_nll_rad(tv, sv, nu));
    const double want = (nu + 1.0) / nu * dr / (1.0 + dr * dr / nu);
    CHECK(std::abs(g.at("t")[0] - want) < 1e-8);
  }
}

TEST_CASE("gradients accumulate only when asked") {
  ad::Tape t;
  auto x = t.variable(Tensor::scalar(2.0), "x");
  auto y = x * x + x;
  auto g1 = t.backward(y);
  auto g2 = t.backward(y);
  CHECK(g1.at("x").item() == 5.0);
  CHECK(g2.at("x").item() == 5.0);
}
