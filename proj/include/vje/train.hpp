#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "vje/config.hpp"
#include "vje/data.hpp"
#include "vje/model.hpp"
#include "vje/objective.hpp"
#include "vje/run_config.hpp"

namespace vje {

// var_cv when var_mean is too small for the ratio to mean anything.
inline constexpr double kCvUndefined = -1.0;

struct PosteriorStats {
  double var_mean = 0.0;
  double var_cv = 0.0;  // std / mean over latent dims, per example, then averaged
  double kl = 0.0;
  std::size_t epoch = 0;
};

// Posterior statistics of the current model over clean inputs.
PosteriorStats posterior_stats(const Model& model, const std::vector<Vector>& inputs);

struct EpochMetrics {
  std::size_t epoch = 0;
  LossBreakdown loss;  // mean over the epoch's examples
  double var_mean = 0.0;
  double var_cv = 0.0;
  double lr = 0.0;  // rate used for the epoch's last step
};

struct TrainOptions {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out_dir;  // metrics.csv and checkpoints go here when set
  std::size_t checkpoint_every = 0;
  Json config_echo = Json::object();
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  PosteriorStats final_stats;
  std::uint64_t rng_counter = 0;
};

// Minibatch training of the symmetric loss. Shuffling, views and reparameterization
// noise all come from one stream derived from opts.seed, consumed in a fixed order.
// A NumericError is rethrown with the epoch and batch prepended.
TrainResult train(Model& model, const Dataset& data, const SyntheticDataConfig& views, const VjeConfig& vje,
                  const OptimConfig& opt, const TrainOptions& opts);

std::string metrics_csv(const std::vector<EpochMetrics>& history, std::uint64_t seed);

}  // namespace vje
