#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vje/config.hpp"
#include "vje/data.hpp"
#include "vje/distributions.hpp"
#include "vje/model.hpp"
#include "vje/train.hpp"

namespace vje {

struct ScoreRecord {
  std::size_t example_id = 0;
  double s_joint = 0.0;  // l_dir + l_rad of the self pair, higher is more anomalous
  double s_var = 0.0;    // sum sigma2
  double s_ent = 0.0;    // 1/2 sum log(2 pi e sigma2)
  bool is_inlier = true;
};

// Scores an embedding against its own posterior with the deterministic latent s = mu:
// l_dir(z_hat, mu_hat; sigma2) + l_rad(||z|| - ||mu||).
ScoreRecord score_posterior(std::span<const double> z, const dist::PosteriorParams& q, double nu);
ScoreRecord score_example(const Model& model, std::span<const double> x, const VjeConfig& cfg);

// Joint score averaged over m posterior samples s ~ q instead of s = mu.
double sampled_joint_score(const Model& model, std::span<const double> x, const VjeConfig& cfg, Rng& rng,
                           std::size_t m);

// Mann-Whitney AUROC with outliers as the positive class:
// P(score_out > score_in) + 1/2 P(score_out = score_in). DomainError unless both classes occur.
double auroc(std::span<const double> scores, const std::vector<bool>& is_inlier);

struct AurocTriple {
  double joint = 0.0;
  double var = 0.0;
  double ent = 0.0;
};

AurocTriple auroc_triple(const std::vector<ScoreRecord>& records);

struct OneClassResult {
  AurocTriple auroc;
  PosteriorStats final_stats;
  std::vector<ScoreRecord> scores;
};

struct OneClassSetup {
  SyntheticDataConfig data;
  ModelConfig model;
  VjeConfig vje;
  OptimConfig optim;
};

// Trains on the inlier class of the training split only, then scores the whole
// mixed test split on clean inputs.
OneClassResult one_class_run(std::size_t inlier_class, const OneClassSetup& setup, std::uint64_t seed);

// Seed used for the (beta, nu, class) cell of a sweep and by a direct one-class run.
std::uint64_t cell_seed(std::uint64_t base, double beta, double nu, std::size_t cls);

inline constexpr double kCollapseVarMean = 1e-4;

struct SweepCell {
  double beta = 0.0;
  double nu = 0.0;
  std::size_t cls = 0;
  AurocTriple auroc;
  std::string status;  // ok | collapsed | error
  std::string message;
};

// Runs every (beta, nu, class) cell; a failing cell is recorded with status "error"
// and the sweep carries on. Cells run on up to `threads` workers; the result
// order (beta major, then nu, then class) does not depend on scheduling.
std::vector<SweepCell> sweep(const std::vector<double>& betas, const std::vector<double>& nus,
                             const std::vector<std::size_t>& classes, const OneClassSetup& base,
                             std::uint64_t seed, unsigned threads = 1);

std::string sweep_csv(const std::vector<SweepCell>& cells, std::uint64_t seed);
std::string scores_csv(const std::vector<ScoreRecord>& records, std::uint64_t seed);

}  // namespace vje
