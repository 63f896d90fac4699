#include "vje/anomaly.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "vje/csv.hpp"
#include "vje/error.hpp"

namespace vje {

ScoreRecord score_posterior(std::span<const double> z, const dist::PosteriorParams& q, double nu) {
  if (z.size() != q.dim()) throw ShapeError("score_posterior: embedding and posterior dimensions differ");
  ScoreRecord r;
  r.s_joint = dist::nll_dir(z, q.mu, q.sigma2, nu) + dist::nll_rad(norm2(z) - norm2(q.mu), nu);
  for (double v : q.sigma2) {
    r.s_var += v;
    r.s_ent += 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * v);
  }
  return r;
}

ScoreRecord score_example(const Model& model, std::span<const double> x, const VjeConfig& cfg) {
  if (!model.params().all_finite()) throw NumericError("score_example: model has non-finite parameters");
  const Vector z = model.encode(x);
  return score_posterior(z, model.infer(z), cfg.nu);
}

double sampled_joint_score(const Model& model, std::span<const double> x, const VjeConfig& cfg, Rng& rng,
                           std::size_t m) {
  if (m == 0) throw ConfigError("sampled_joint_score: need at least one sample");
  const Vector z = model.encode(x);
  const dist::PosteriorParams q = model.infer(z);
  const double zn = norm2(z);
  double acc = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    Vector s = standard_normal_vec(rng, q.dim());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = q.mu[i] + std::sqrt(q.sigma2[i]) * s[i];
    acc += dist::nll_dir(z, s, q.sigma2, cfg.nu) + dist::nll_rad(zn - norm2(s), cfg.nu);
  }
  return acc / static_cast<double>(m);
}

double auroc(std::span<const double> scores, const std::vector<bool>& is_inlier) {
  if (scores.size() != is_inlier.size()) throw ShapeError("auroc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of midranks of the outliers.
  double rank_sum = 0.0;
  std::size_t n_out = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (!is_inlier[idx[k]]) {
        rank_sum += midrank;
        ++n_out;
      }
    }
    i = j;
  }
  const std::size_t n_in = n - n_out;
  if (n_in == 0 || n_out == 0) throw DomainError("auroc: needs both inliers and outliers");
  const auto no = static_cast<double>(n_out);
  return (rank_sum - no * (no + 1.0) / 2.0) / (no * static_cast<double>(n_in));
}

AurocTriple auroc_triple(const std::vector<ScoreRecord>& records) {
  Vector j, v, e;
  std::vector<bool> lab;
  for (const auto& r : records) {
    j.push_back(r.s_joint);
    v.push_back(r.s_var);
    e.push_back(r.s_ent);
    lab.push_back(r.is_inlier);
  }
  return {auroc(j, lab), auroc(v, lab), auroc(e, lab)};
}

OneClassResult one_class_run(std::size_t inlier_class, const OneClassSetup& setup, std::uint64_t seed) {
  if (inlier_class >= setup.data.n_classes) {
    throw ConfigError("inlier: class " + std::to_string(inlier_class) + " out of range for " +
                      std::to_string(setup.data.n_classes) + " classes");
  }
  if (setup.data.n_classes < 2) throw ConfigError("data.n_classes: one-class runs need at least two classes");
  const SyntheticData data = gen_dataset(setup.data);
  const Dataset inliers = data.train.filter_class(inlier_class);

  Rng init_rng(derive_seed(seed, {std::uint64_t{20}}));
  Model model = Model::initialized(setup.model, init_rng);
  TrainOptions opts;
  opts.seed = seed;
  const TrainResult tr = train(model, inliers, setup.data, setup.vje, setup.optim, opts);

  OneClassResult out;
  out.final_stats = tr.final_stats;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    ScoreRecord r = score_example(model, data.test.inputs[i], setup.vje);
    r.example_id = i;
    r.is_inlier = data.test.labels[i] == inlier_class;
    out.scores.push_back(r);
  }
  out.auroc = auroc_triple(out.scores);
  return out;
}

std::uint64_t cell_seed(std::uint64_t base, double beta, double nu, std::size_t cls) {
  return derive_seed(base, {beta, nu, static_cast<double>(cls)});
}

std::vector<SweepCell> sweep(const std::vector<double>& betas, const std::vector<double>& nus,
                             const std::vector<std::size_t>& classes, const OneClassSetup& base, std::uint64_t seed,
                             unsigned threads) {
  if (betas.empty() || nus.empty() || classes.empty()) throw ConfigError("sweep: betas, nus and classes must be non-empty");
  std::vector<SweepCell> cells;
  for (double b : betas) {
    for (double n : nus) {
      for (std::size_t c : classes) {
        SweepCell cell;
        cell.beta = b;
        cell.nu = n;
        cell.cls = c;
        cells.push_back(cell);
      }
    }
  }

  auto run_cell = [&](SweepCell& cell) {
    try {
      OneClassSetup s = base;
      s.vje.beta = cell.beta;
      s.vje.nu = cell.nu;
      const OneClassResult r = one_class_run(cell.cls, s, cell_seed(seed, cell.beta, cell.nu, cell.cls));
      cell.auroc = r.auroc;
      cell.status = r.final_stats.var_mean < kCollapseVarMean ? "collapsed" : "ok";
    } catch (const std::exception& e) {
      cell.auroc = {std::nan(""), std::nan(""), std::nan("")};
      cell.status = "error";
      cell.message = e.what();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(cells[i]);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells, std::uint64_t seed) {
  CsvTable t(seed, {"beta", "nu", "class", "auroc_joint", "auroc_var", "auroc_ent", "status"});
  for (const auto& c : cells) {
    t.add_row({fmt_double(c.beta), fmt_double(c.nu), std::to_string(c.cls), fmt_double(c.auroc.joint),
               fmt_double(c.auroc.var), fmt_double(c.auroc.ent), c.status});
  }
  return t.str();
}

std::string scores_csv(const std::vector<ScoreRecord>& records, std::uint64_t seed) {
  CsvTable t(seed, {"example_id", "s_joint", "s_var", "s_ent", "is_inlier"});
  for (const auto& r : records) {
    t.add_row({std::to_string(r.example_id), fmt_double(r.s_joint), fmt_double(r.s_var), fmt_double(r.s_ent),
               r.is_inlier ? "1" : "0"});
  }
  return t.str();
}

}  // namespace vje
