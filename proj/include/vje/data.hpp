#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "vje/config.hpp"
#include "vje/numerics.hpp"

namespace vje {

struct Dataset {
  std::vector<Vector> inputs;
  std::vector<std::size_t> labels;
  std::size_t n_classes = 0;

  std::size_t size() const noexcept { return inputs.size(); }
  // Examples whose label is `cls`, in order.
  Dataset filter_class(std::size_t cls) const;
};

struct SyntheticData {
  Dataset train;
  Dataset test;
  std::vector<Vector> class_means;
};

// Gaussian mixture with unit within-class covariance. Class means sit on the
// sphere of radius class_separation, redrawn until every pair is at least
// class_separation apart. Train and test come from separate substreams of cfg.seed.
SyntheticData gen_dataset(const SyntheticDataConfig& cfg);

// Two independent views: x + N(0, sigma^2 I), then each coordinate zeroed with
// probability view_mask_prob.
std::pair<Vector, Vector> make_views(const Vector& x, const SyntheticDataConfig& cfg, Rng& rng);
Vector make_view(const Vector& x, const SyntheticDataConfig& cfg, Rng& rng);

// Fraction of `test` assigned to its own class by the nearest class mean of `train`.
double nearest_centroid_accuracy(const Dataset& train, const Dataset& test);

}  // namespace vje
