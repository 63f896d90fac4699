#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gen.hpp"
#include "vje/anomaly.hpp"
#include "vje/error.hpp"

using namespace vje;

namespace {

// O(n^2) pairwise count, outliers positive.
double brute_auroc(const Vector& s, const std::vector<bool>& in) {
  double num = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (in[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!in[j]) continue;
      pairs += 1.0;
      if (s[i] > s[j]) num += 1.0;
      if (s[i] == s[j]) num += 0.5;
    }
  }
  return num / pairs;
}

OneClassSetup tiny() {
  OneClassSetup s;
  s.data.n_classes = 2;
  s.data.samples_per_class = 32;
  s.data.test_samples_per_class = 16;
  s.data.input_dim = 8;
  s.model.encoder.input_dim = 8;
  s.model.encoder.hidden_dims = {8};
  s.model.encoder.embed_dim = 4;
  s.model.inference.embed_dim = 4;
  s.model.inference.bottleneck_dim = 2;
  s.model.inference.depth = 2;
  s.vje.embed_dim = 4;
  s.optim.total_epochs = 2;
  s.optim.warmup_epochs = 1;
  s.optim.batch_size = 16;
  return s;
}

}  // namespace

TEST_CASE("scores on hand-built posteriors") {
  const Vector z{0.5, -1.0, 2.0};
  const dist::PosteriorParams q{z, {1.0, 1.0, 1.0}};
  const auto r = score_posterior(z, q, 3.0);
  CHECK(r.s_joint == 0.0);
  CHECK(r.s_var == 3.0);
  CHECK(r.s_ent == doctest::Approx(1.5 * std::log(2 * std::numbers::pi * std::numbers::e)).epsilon(1e-14));

  const dist::PosteriorParams doubled{z, {2.0, 2.0, 2.0}};
  const auto d = score_posterior(z, doubled, 3.0);
  CHECK(d.s_joint - r.s_joint == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-14));
  CHECK(d.s_var > r.s_var);
  CHECK(d.s_ent > r.s_ent);
}

TEST_CASE("property: s_joint is the sum of its two terms") {
  gen::for_all(81, 100, [](gen::Gen& g, int) {
    const std::size_t d = g.size(1, 12);
    const Vector z = g.signed_vec(d, 0.01, 3.0);
    const dist::PosteriorParams q{g.signed_vec(d, 0.01, 3.0), g.vec(d, 1e-3, 4.0)};
    const double nu = g.real(0.5, 20.0);
    const auto r = score_posterior(z, q, nu);
    CHECK(r.s_joint == dist::nll_dir(z, q.mu, q.sigma2, nu) + dist::nll_rad(norm2(z) - norm2(q.mu), nu));
  });
}

TEST_CASE("auroc examples") {
  CHECK(auroc(Vector{1, 2, 3}, {true, true, false}) == 1.0);
  CHECK(auroc(Vector{3, 2, 1}, {true, true, false}) == 0.0);
  CHECK(auroc(Vector{5, 5, 5, 5}, {true, false, true, false}) == 0.5);
  CHECK_THROWS_AS(auroc(Vector{1, 2}, {true, true}), DomainError);
  CHECK_THROWS_AS(auroc(Vector{1, 2}, {true}), ShapeError);
}

TEST_CASE("property: auroc matches the pairwise oracle and ignores monotone transforms") {
  gen::for_all(83, 50, [](gen::Gen& g, int) {
    const std::size_t n = g.size(2, 200);
    Vector s(n);
    std::vector<bool> in(n);
    // Coarse grid so ties are common.
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(g.real(-3.0, 3.0) * 4.0) / 4.0;
      in[i] = g.coin();
    }
    in[0] = true;
    in[1] = false;
    const double a = auroc(s, in);
    CHECK(std::abs(a - brute_auroc(s, in)) < 1e-12);

    Vector ex(n), aff(n);
    for (std::size_t i = 0; i < n; ++i) {
      ex[i] = std::exp(s[i]);
      aff[i] = 3.0 * s[i] + 7.0;
    }
    CHECK(auroc(ex, in) == a);
    CHECK(auroc(aff, in) == a);
  });
}

TEST_CASE("scoring consumes no randomness and is repeatable") {
  const auto setup = tiny();
  Rng rng(4);
  const Model m = Model::initialized(setup.model, rng);
  const Vector x = standard_normal_vec(rng, 8);
  const auto a = score_example(m, x, setup.vje);
  const auto b = score_example(m, x, setup.vje);
  CHECK(a.s_joint == b.s_joint);
  CHECK(a.s_ent == b.s_ent);
  Rng r1(5), r2(5);
  CHECK(sampled_joint_score(m, x, setup.vje, r1, 16) == sampled_joint_score(m, x, setup.vje, r2, 16));
}

TEST_CASE("a 1x1 sweep equals the direct run") {
  const auto setup = tiny();
  const double beta = setup.vje.beta, nu = setup.vje.nu;
  const auto direct = one_class_run(1, setup, cell_seed(77, beta, nu, 1));
  const auto cells = sweep({beta}, {nu}, {1}, setup, 77);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].status != "error");
  CHECK(cells[0].auroc.joint == direct.auroc.joint);
  CHECK(cells[0].auroc.var == direct.auroc.var);
  CHECK(cells[0].auroc.ent == direct.auroc.ent);
  CHECK(direct.scores.size() == 32);
}

TEST_CASE("sweep order and thread count do not change the CSV") {
  const auto setup = tiny();
  const auto one = sweep({0.0, 1.0}, {0.5, 3.0}, {0, 1}, setup, 11, 1);
  const auto four = sweep({0.0, 1.0}, {0.5, 3.0}, {0, 1}, setup, 11, 4);
  CHECK(sweep_csv(one, 11) == sweep_csv(four, 11));
  REQUIRE(one.size() == 8);
  CHECK(one[0].beta == 0.0);
  CHECK(one[0].nu == 0.5);
  CHECK(one[1].cls == 1);
  CHECK(one[2].nu == 3.0);
  CHECK(one[4].beta == 1.0);
}

TEST_CASE("a failing cell is recorded and the sweep carries on") {
  const auto setup = tiny();
  // nu = -1 fails validation inside the cell only.
  const auto cells = sweep({1.0}, {-1.0, 3.0}, {0}, setup, 3);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].status == "error");
  CHECK(!cells[0].message.empty());
  CHECK(cells[1].status != "error");
}

TEST_CASE("inlier class out of range") {
  CHECK_THROWS_AS(one_class_run(5, tiny(), 1), ConfigError);
}
