#include "vje/knn.hpp"

#include <algorithm>
#include <map>

#include "vje/error.hpp"
#include "vje/kernels.hpp"

namespace vje {

std::vector<Vector> embed_all(const Model& model, const std::vector<Vector>& inputs, EmbedSpace space) {
  std::vector<Vector> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) {
    Vector z = model.encode(x);
    out.push_back(space == EmbedSpace::z ? std::move(z) : model.infer(z).mu);
  }
  return out;
}

double knn_accuracy(const std::vector<Vector>& train, const std::vector<std::size_t>& train_labels,
                    const std::vector<Vector>& test, const std::vector<std::size_t>& test_labels, std::size_t k) {
  if (train.empty() || test.empty()) throw ConfigError("knn: empty train or test set");
  if (train.size() != train_labels.size() || test.size() != test_labels.size()) {
    throw ShapeError("knn: embeddings and labels differ in length");
  }
  if (k == 0 || k > train.size()) {
    throw ConfigError("k: must be in [1, " + std::to_string(train.size()) + "], got " + std::to_string(k));
  }
  const std::size_t dim = train[0].size();
  auto unit = [&](const std::vector<Vector>& xs) {
    std::vector<Vector> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
      if (x.size() != dim) throw ShapeError("knn: embeddings of differing length");
      out.push_back(safe_normalize(x, 1e-12));
    }
    return out;
  };
  const std::vector<Vector> tr = unit(train);
  const std::vector<Vector> te = unit(test);

  std::vector<std::pair<double, std::size_t>> sims(tr.size());
  std::size_t correct = 0;
  for (std::size_t t = 0; t < te.size(); ++t) {
    for (std::size_t i = 0; i < tr.size(); ++i) sims[i] = {kernels::dot(te[t].data(), tr[i].data(), dim), i};
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    std::map<std::size_t, std::pair<std::size_t, double>> votes;  // class -> (count, summed similarity)
    for (std::size_t j = 0; j < k; ++j) {
      auto& v = votes[train_labels[sims[j].second]];
      v.first += 1;
      v.second += sims[j].first;
    }
    std::size_t best = votes.begin()->first;
    auto best_v = votes.begin()->second;
    for (const auto& [cls, v] : votes) {
      if (v.first > best_v.first || (v.first == best_v.first && v.second > best_v.second)) {
        best = cls;
        best_v = v;
      }
    }
    correct += best == test_labels[t];
  }
  return static_cast<double>(correct) / static_cast<double>(te.size());
}

}  // namespace vje
