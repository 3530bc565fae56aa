#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "refscore/features.hpp"
#include "refscore/rng.hpp"

namespace refscore {

// Class-probability output of a classifier, ordered by class index.
struct ProbVector {
  std::vector<double> p;

  // argmax; ties resolve to the lower class.
  int predicted() const;
  // Probability of the predicted class.
  double confidence() const;
};

enum class FeatureRule { all, sqrt, fixed };

struct TreeParams {
  std::optional<std::size_t> max_depth;  // nullopt: grow until pure
  std::size_t min_samples_split = 2;
  FeatureRule feature_rule = FeatureRule::all;
  std::size_t n_features = 0;  // used by FeatureRule::fixed

  void validate() const;
  std::size_t features_per_split(std::size_t total) const;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when value <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double gain = 0.0;
  std::vector<double> value;  // class distribution or regression output
};

class Tree {
 public:
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(const FeatureMatrix& matrix, std::size_t row) const;
  std::size_t depth() const;
};

nlohmann::json tree_to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

// Column-major copy of a feature matrix for split search. Text columns are
// kept as byte masks plus their non-zero row lists.
class ColumnStore {
 public:
  explicit ColumnStore(const FeatureMatrix& matrix);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return n_dense_ + n_text_; }
  bool is_binary(std::size_t col) const { return col >= n_dense_; }
  double value(std::size_t row, std::size_t col) const;
  std::span<const double> dense(std::size_t col) const;
  std::span<const std::uint8_t> mask(std::size_t col) const;
  std::span<const std::uint32_t> nonzeros(std::size_t col) const;

 private:
  std::size_t rows_ = 0;
  std::size_t n_dense_ = 0;
  std::size_t n_text_ = 0;
  std::vector<double> dense_;          // n_dense columns of `rows_`
  std::vector<std::uint8_t> masks_;    // n_text columns of `rows_`
  std::vector<std::vector<std::uint32_t>> nonzeros_;
};

// Greedy CART classification tree on Gini impurity. `samples` lists the
// training rows, repeats allowed (bootstrap). Features are sampled per
// split according to params.feature_rule using `rng`.
Tree grow_classification_tree(const ColumnStore& columns, std::span<const std::uint32_t> samples,
                              std::span<const int> labels, std::size_t n_classes, const TreeParams& params,
                              Rng& rng);

// Fits a single classification tree on every row of `matrix`.
Tree fit_tree(const FeatureMatrix& matrix, std::span<const int> labels, std::size_t n_classes,
              const TreeParams& params, std::uint64_t seed);

// Class distribution from one tree.
ProbVector tree_predict(const Tree& tree, const FeatureMatrix& matrix, std::size_t row);

// Gini impurity of a class-count vector.
double gini(std::span<const double> counts);

}  // namespace refscore
