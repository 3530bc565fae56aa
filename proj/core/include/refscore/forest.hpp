#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "refscore/tree.hpp"

namespace refscore {

struct ForestParams {
  std::size_t n_trees = 100;
  TreeParams tree{std::nullopt, 2, FeatureRule::sqrt, 0};
  bool bootstrap = true;

  void validate() const;
};

// Random forest: bagged Gini trees; probabilities are the mean of the
// per-tree leaf distributions.
struct ForestModel {
  std::vector<Tree> trees;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  std::uint64_t seed = 0;
};

// Tree t is grown from seed derive_seed(seed, t), so the fit is identical
// for any thread count.
ForestModel fit_forest(const FeatureMatrix& matrix, std::span<const int> labels, std::size_t n_classes,
                       const ForestParams& params, std::uint64_t seed);

std::vector<ProbVector> predict_proba(const ForestModel& model, const FeatureMatrix& matrix);

}  // namespace refscore
