#include "refscore/forest.hpp"

#include <numeric>

#include "refscore/errors.hpp"
#include "refscore/parallel.hpp"

namespace refscore {

void ForestParams::validate() const {
  if (n_trees == 0) throw ConfigError("a forest needs at least one tree");
  tree.validate();
}

ForestModel fit_forest(const FeatureMatrix& matrix, std::span<const int> labels, std::size_t n_classes,
                       const ForestParams& params, std::uint64_t seed) {
  params.validate();
  if (matrix.rows() == 0) throw PreconditionError("cannot fit a forest on zero rows");
  if (labels.size() != matrix.rows()) throw PreconditionError("labels and feature rows differ in length");

  const ColumnStore columns(matrix);
  ForestModel model;
  model.n_classes = n_classes;
  model.n_features = matrix.cols();
  model.seed = seed;
  model.trees.resize(params.n_trees);
  const auto n = static_cast<std::uint32_t>(matrix.rows());
  parallel_for(params.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::uint32_t> samples(n);
    if (params.bootstrap) {
      for (auto& s : samples) s = static_cast<std::uint32_t>(rng.index(n));
    } else {
      std::iota(samples.begin(), samples.end(), 0u);
    }
    model.trees[t] = grow_classification_tree(columns, samples, labels, n_classes, params.tree, rng);
  });
  return model;
}

std::vector<ProbVector> predict_proba(const ForestModel& model, const FeatureMatrix& matrix) {
  std::vector<ProbVector> out(matrix.rows());
  parallel_for(matrix.rows(), [&](std::size_t r) {
    std::vector<double> p(model.n_classes, 0.0);
    for (const auto& tree : model.trees) {
      const auto& leaf = tree.leaf_for(matrix, r);
      for (std::size_t k = 0; k < model.n_classes; ++k) p[k] += leaf.value[k];
    }
    for (double& v : p) v /= static_cast<double>(model.trees.size());
    out[r].p = std::move(p);
  });
  return out;
}

}  // namespace refscore
