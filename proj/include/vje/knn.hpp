#pragma once

#include <cstddef>
#include <vector>

#include "vje/model.hpp"
#include "vje/numerics.hpp"

namespace vje {

enum class EmbedSpace { z, mu };

std::vector<Vector> embed_all(const Model& model, const std::vector<Vector>& inputs, EmbedSpace space);

// Cosine-similarity k-NN majority vote. Ties go to the larger summed similarity,
// then to the smaller class index. ConfigError on empty sets or k outside [1, n_train].
double knn_accuracy(const std::vector<Vector>& train, const std::vector<std::size_t>& train_labels,
                    const std::vector<Vector>& test, const std::vector<std::size_t>& test_labels, std::size_t k);

}  // namespace vje
