#include <doctest.h>

#include <cmath>
#include <vector>

#include "gen.hpp"
#include "vje/error.hpp"
#include "vje/kernels.hpp"

using namespace vje;
using kernels::Isa;

namespace {

std::vector<Isa> simd_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (kernels::available(isa)) out.push_back(isa);
  }
  return out;
}

// Reordered sums differ by a few ulps of the sum of magnitudes.
bool close(double a, double b, double magnitude) { return std::abs(a - b) <= 1e-13 * (1.0 + magnitude); }

double abs_dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return s;
}

}  // namespace

TEST_CASE("scalar table is always there") {
  CHECK(kernels::available(Isa::scalar));
  CHECK(kernels::table(Isa::scalar).isa == Isa::scalar);
  CHECK(kernels::isa_name(Isa::scalar) == "scalar");
  CHECK(kernels::available(kernels::detect_best()));
}

TEST_CASE("select switches the active table") {
  const Isa before = kernels::active().isa;
  kernels::select(Isa::scalar);
  CHECK(kernels::active().isa == Isa::scalar);
  kernels::select(before);
  CHECK(kernels::active().isa == before);
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (!kernels::available(isa)) CHECK_THROWS_AS(kernels::select(isa), Error);
  }
}

TEST_CASE("scalar kernels on hand-sized inputs") {
  const auto& t = kernels::table(Isa::scalar);
  const Vector a{1, 2, 3}, b{4, 5, 6};
  CHECK(t.dot(a.data(), b.data(), 3) == 32.0);

  Vector y{1, 1, 1};
  t.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == Vector{3, 5, 7});

  const Vector w{1, 2, 3, 4, 5, 6};  // 2 x 3
  Vector out(2);
  t.matvec(w.data(), a.data(), out.data(), 2, 3);
  CHECK(out == Vector{14, 32});

  Vector acc(3, 1.0);
  const Vector g{1, -1};
  t.matvec_t_acc(w.data(), g.data(), acc.data(), 2, 3);
  CHECK(acc == Vector{-2, -2, -2});

  Vector o(6, 0.0);
  t.outer_acc(g.data(), a.data(), o.data(), 2, 3);
  CHECK(o == Vector{1, 2, 3, -1, -2, -3});

  Vector p{1.0}, v{0.0};
  const Vector grad{1.0};
  t.momentum_step(p.data(), v.data(), grad.data(), 1, 0.1, 0.0, 0.0);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("SIMD kernels agree with scalar on random shapes") {
  const auto& ref = kernels::table(Isa::scalar);
  for (Isa isa : simd_isas()) {
    CAPTURE(kernels::isa_name(isa));
    const auto& simd = kernels::table(isa);
    gen::for_all(11, 200, [&](gen::Gen& g, int) {
      // Sizes straddle the vector width and the unroll factor, including 0.
      const std::size_t n = g.size(0, 67);
      const std::size_t rows = g.size(1, 19);
      const Vector a = g.signed_vec(n, 0.0, 3.0);
      const Vector b = g.signed_vec(n, 0.0, 3.0);
      CHECK(close(ref.dot(a.data(), b.data(), n), simd.dot(a.data(), b.data(), n), abs_dot(a, b)));

      const double alpha = g.real(-2.0, 2.0);
      Vector y1 = b, y2 = b;
      ref.axpy(alpha, a.data(), y1.data(), n);
      simd.axpy(alpha, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], std::abs(alpha * a[i]) + std::abs(b[i])));

      const Vector w = g.signed_vec(rows * n, 0.0, 1.0);
      Vector m1(rows), m2(rows);
      ref.matvec(w.data(), a.data(), m1.data(), rows, n);
      simd.matvec(w.data(), a.data(), m2.data(), rows, n);
      for (std::size_t r = 0; r < rows; ++r) {
        const Vector row(w.begin() + static_cast<std::ptrdiff_t>(r * n),
                         w.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
        CHECK(close(m1[r], m2[r], abs_dot(row, a)));
      }

      const Vector gr = g.signed_vec(rows, 0.0, 1.0);
      Vector t1 = a, t2 = a;
      ref.matvec_t_acc(w.data(), gr.data(), t1.data(), rows, n);
      simd.matvec_t_acc(w.data(), gr.data(), t2.data(), rows, n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(t1[i], t2[i], 10.0 * static_cast<double>(rows)));

      Vector o1 = w, o2 = w;
      ref.outer_acc(gr.data(), a.data(), o1.data(), rows, n);
      simd.outer_acc(gr.data(), a.data(), o2.data(), rows, n);
      for (std::size_t i = 0; i < o1.size(); ++i) CHECK(close(o1[i], o2[i], 4.0));

      Vector p1 = a, p2 = a, v1 = b, v2 = b;
      const double lr = g.real(0.0, 0.1), mom = g.real(0.0, 0.99), wd = g.real(0.0, 1e-3);
      ref.momentum_step(p1.data(), v1.data(), w.data(), n, lr, mom, wd);
      simd.momentum_step(p2.data(), v2.data(), w.data(), n, lr, mom, wd);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(close(v1[i], v2[i], 5.0));
        CHECK(close(p1[i], p2[i], 5.0));
      }
    });
  }
}
