#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace vje {

struct EncoderConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden_dims{128, 128};
  std::size_t embed_dim = 16;
  std::string activation = "relu";

  void validate() const;
};

// Widths run embed_dim -> bottleneck -> ... -> bottleneck -> embed_dim over `depth`
// Linear + LayerNorm + relu blocks, then two linear heads back to embed_dim.
struct InferenceNetConfig {
  std::size_t embed_dim = 16;
  std::size_t bottleneck_dim = 8;
  std::size_t depth = 3;

  void validate() const;
};

struct ModelConfig {
  EncoderConfig encoder;
  InferenceNetConfig inference;

  // Also rejects any mismatch between encoder output and inference input: the
  // inference net reads z directly, there is no projection in between.
  void validate() const;
};

struct LossTerms {
  bool dir = true;
  bool rad = true;
  bool kl = true;

  void validate() const;  // ConfigError when all three are off
};

struct VjeConfig {
  double nu = 3.0;
  double beta = 1.0;
  std::size_t embed_dim = 16;
  std::size_t mc_samples = 1;
  double eps_norm = 1e-6;
  double var_floor = 1e-6;
  LossTerms terms;

  void validate() const;
};

struct SyntheticDataConfig {
  std::size_t n_classes = 4;
  std::size_t samples_per_class = 512;
  std::size_t test_samples_per_class = 128;
  std::size_t input_dim = 32;
  double class_separation = 16.0;
  double view_noise_sigma = 0.5;
  double view_mask_prob = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimConfig {
  double lr0 = 0.02;
  double momentum = 0.9;
  double weight_decay = 5e-6;
  std::size_t warmup_epochs = 10;
  std::size_t total_epochs = 100;
  std::size_t batch_size = 64;

  void validate() const;
};

struct RunConfig {
  int format_version = 1;
  std::uint64_t seed = 0;
  SyntheticDataConfig data;
  ModelConfig model;
  VjeConfig vje;
  OptimConfig optim;
  std::string out_dir = "out";
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint

  void validate() const;
};

inline constexpr int kFormatVersion = 1;

}  // namespace vje
