#include "vje/data.hpp"

#include <cmath>
#include <limits>

#include "vje/error.hpp"

namespace vje {

Dataset Dataset::filter_class(std::size_t cls) const {
  Dataset out;
  out.n_classes = n_classes;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (labels[i] == cls) {
      out.inputs.push_back(inputs[i]);
      out.labels.push_back(cls);
    }
  }
  return out;
}

namespace {

constexpr int kMaxMeanAttempts = 10000;

std::vector<Vector> draw_means(const SyntheticDataConfig& cfg, Rng& rng) {
  std::vector<Vector> means;
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxMeanAttempts && !placed; ++attempt) {
      Vector m = standard_normal_vec(rng, cfg.input_dim);
      const double n = norm2(m);
      for (double& v : m) v *= cfg.class_separation / n;
      placed = true;
      for (const auto& other : means) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) d2 += (m[i] - other[i]) * (m[i] - other[i]);
        if (std::sqrt(d2) < cfg.class_separation) {
          placed = false;
          break;
        }
      }
      if (placed) means.push_back(std::move(m));
    }
    if (!placed) {
      throw ConfigError("data.class_separation: could not place " + std::to_string(cfg.n_classes) +
                        " class means at pairwise distance >= separation in " + std::to_string(cfg.input_dim) +
                        " dimensions");
    }
  }
  return means;
}

Dataset draw_split(const std::vector<Vector>& means, std::size_t per_class, std::size_t dim, Rng& rng) {
  Dataset d;
  d.n_classes = means.size();
  for (std::size_t c = 0; c < means.size(); ++c) {
    for (std::size_t k = 0; k < per_class; ++k) {
      Vector x = standard_normal_vec(rng, dim);
      for (std::size_t i = 0; i < dim; ++i) x[i] += means[c][i];
      d.inputs.push_back(std::move(x));
      d.labels.push_back(c);
    }
  }
  return d;
}

}  // namespace

SyntheticData gen_dataset(const SyntheticDataConfig& cfg) {
  cfg.validate();
  Rng mean_rng(derive_seed(cfg.seed, {std::uint64_t{1}}));
  Rng train_rng(derive_seed(cfg.seed, {std::uint64_t{2}}));
  Rng test_rng(derive_seed(cfg.seed, {std::uint64_t{3}}));
  SyntheticData out;
  out.class_means = draw_means(cfg, mean_rng);
  out.train = draw_split(out.class_means, cfg.samples_per_class, cfg.input_dim, train_rng);
  out.test = draw_split(out.class_means, cfg.test_samples_per_class, cfg.input_dim, test_rng);
  return out;
}

Vector make_view(const Vector& x, const SyntheticDataConfig& cfg, Rng& rng) {
  Vector v = x;
  for (double& e : v) {
    const double noise = cfg.view_noise_sigma * rng.standard_normal();
    const bool masked = rng.uniform() < cfg.view_mask_prob;
    e = masked ? 0.0 : e + noise;
  }
  return v;
}

std::pair<Vector, Vector> make_views(const Vector& x, const SyntheticDataConfig& cfg, Rng& rng) {
  if (!(cfg.view_mask_prob >= 0.0 && cfg.view_mask_prob < 1.0)) {
    throw ConfigError("data.view_mask_prob: must be in [0, 1)");
  }
  Vector a = make_view(x, cfg, rng);
  Vector b = make_view(x, cfg, rng);
  return {std::move(a), std::move(b)};
}

double nearest_centroid_accuracy(const Dataset& train, const Dataset& test) {
  if (train.size() == 0 || test.size() == 0) throw ConfigError("nearest_centroid_accuracy: empty dataset");
  const std::size_t dim = train.inputs[0].size();
  std::vector<Vector> centroids(train.n_classes, Vector(dim, 0.0));
  std::vector<double> counts(train.n_classes, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t k = 0; k < dim; ++k) centroids[train.labels[i]][k] += train.inputs[i][k];
    counts[train.labels[i]] += 1.0;
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] > 0) {
      for (double& v : centroids[c]) v /= counts[c];
    }
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] == 0) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d2 += (test.inputs[i][k] - centroids[c][k]) * (test.inputs[i][k] - centroids[c][k]);
      if (d2 < best_d) {
        best_d = d2;
        best = c;
      }
    }
    correct += best == test.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace vje
