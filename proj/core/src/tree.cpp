#include "refscore/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "refscore/errors.hpp"

namespace refscore {

int ProbVector::predicted() const {
  int best = 0;
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  return best;
}

double ProbVector::confidence() const { return p.empty() ? 0.0 : p[static_cast<std::size_t>(predicted())]; }

void TreeParams::validate() const {
  if (max_depth && *max_depth == 0) throw ConfigError("max_depth must be at least 1");
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be at least 2");
  if (feature_rule == FeatureRule::fixed && n_features == 0)
    throw ConfigError("a fixed feature count must be at least 1");
}

std::size_t TreeParams::features_per_split(std::size_t total) const {
  switch (feature_rule) {
    case FeatureRule::all:
      return total;
    case FeatureRule::sqrt:
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(total))));
    case FeatureRule::fixed:
      return std::min(n_features, total);
  }
  return total;
}

const TreeNode& Tree::leaf_for(const FeatureMatrix& matrix, std::size_t row) const {
  std::size_t at = 0;
  while (nodes[at].feature >= 0) {
    const auto& n = nodes[at];
    at = static_cast<std::size_t>(matrix.value(row, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left
                                                                                                        : n.right);
  }
  return nodes[at];
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

nlohmann::json tree_to_json(const Tree& tree) {
  auto nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nlohmann::json j;
    if (n.feature >= 0) {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
      j["gain"] = n.gain;
    }
    j["value"] = n.value;
    nodes.push_back(std::move(j));
  }
  return nodes;
}

Tree tree_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ValueError("a tree must be a non-empty array of nodes");
  Tree tree;
  const auto n = static_cast<std::int32_t>(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    TreeNode node;
    try {
      node.value = e.at("value").get<std::vector<double>>();
      if (e.contains("feature")) {
        node.feature = e.at("feature").get<std::int32_t>();
        node.threshold = e.at("threshold").get<double>();
        node.left = e.at("left").get<std::int32_t>();
        node.right = e.at("right").get<std::int32_t>();
        node.gain = e.at("gain").get<double>();
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ValueError(fmt::format("tree node {}: {}", i, ex.what()));
    }
    const auto self = static_cast<std::int32_t>(i);
    if (node.feature >= 0 && (node.left <= self || node.right <= self || node.left >= n || node.right >= n))
      throw ValueError(fmt::format("tree node {} has invalid children", i));
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

ColumnStore::ColumnStore(const FeatureMatrix& matrix)
    : rows_(matrix.rows()), n_dense_(matrix.n_dense), n_text_(matrix.n_text()) {
  dense_.resize(n_dense_ * rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < n_dense_; ++c) dense_[c * rows_ + r] = matrix.dense[r * n_dense_ + c];
  masks_.assign(n_text_ * rows_, 0);
  nonzeros_.resize(n_text_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::uint32_t c : matrix.text[r]) {
      masks_[c * rows_ + r] = 1;
      nonzeros_[c].push_back(static_cast<std::uint32_t>(r));
    }
}

double ColumnStore::value(std::size_t row, std::size_t col) const {
  return col < n_dense_ ? dense_[col * rows_ + row] : masks_[(col - n_dense_) * rows_ + row];
}

std::span<const double> ColumnStore::dense(std::size_t col) const {
  return std::span<const double>(dense_).subspan(col * rows_, rows_);
}

std::span<const std::uint8_t> ColumnStore::mask(std::size_t col) const {
  return std::span<const std::uint8_t>(masks_).subspan((col - n_dense_) * rows_, rows_);
}

std::span<const std::uint32_t> ColumnStore::nonzeros(std::size_t col) const { return nonzeros_[col - n_dense_]; }

double gini(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

namespace {

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class ClassificationGrower {
 public:
  ClassificationGrower(const ColumnStore& columns, std::span<const int> labels, std::size_t n_classes,
                       const TreeParams& params, Rng& rng)
      : columns_(columns), labels_(labels), n_classes_(n_classes), params_(params), rng_(rng) {
    order_.resize(columns.cols());
    std::iota(order_.begin(), order_.end(), 0u);
    m_ = params.features_per_split(columns.cols());
  }

  Tree grow(std::vector<std::uint32_t> samples) {
    samples_ = std::move(samples);
    Tree tree;
    struct Pending {
      std::size_t node, begin, end, depth;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, samples_.size(), 0}};
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const auto counts = class_counts(job.begin, job.end);
      const double n = static_cast<double>(job.end - job.begin);
      const double parent = gini(counts);

      Split best;
      const bool can_split = parent > 0.0 && (job.end - job.begin) >= params_.min_samples_split &&
                             (!params_.max_depth || job.depth < *params_.max_depth);
      if (can_split) best = best_split(job.begin, job.end, counts, parent);

      if (best.feature < 0) {
        auto& leaf = tree.nodes[job.node];
        leaf.value.resize(n_classes_);
        for (std::size_t k = 0; k < n_classes_; ++k) leaf.value[k] = counts[k] / n;
        continue;
      }

      const std::size_t mid = partition(job.begin, job.end, best);
      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[job.node];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.gain = best.gain;
      node.left = left;
      node.right = left + 1;
      // Right first so the left subtree is grown (and consumes randomness) first.
      stack.push_back({static_cast<std::size_t>(left + 1), mid, job.end, job.depth + 1});
      stack.push_back({static_cast<std::size_t>(left), job.begin, mid, job.depth + 1});
    }
    return tree;
  }

 private:
  std::vector<double> class_counts(std::size_t begin, std::size_t end) const {
    std::vector<double> counts(n_classes_, 0.0);
    for (std::size_t i = begin; i < end; ++i) counts[static_cast<std::size_t>(labels_[samples_[i]])] += 1.0;
    return counts;
  }

  bool is_constant(std::size_t col, std::size_t begin, std::size_t end) const {
    if (columns_.is_binary(col)) {
      const auto mask = columns_.mask(col);
      const std::uint8_t first = mask[samples_[begin]];
      for (std::size_t i = begin + 1; i < end; ++i)
        if (mask[samples_[i]] != first) return false;
      return true;
    }
    const auto values = columns_.dense(col);
    const double first = values[samples_[begin]];
    for (std::size_t i = begin + 1; i < end; ++i)
      if (values[samples_[i]] != first) return false;
    return true;
  }

  // Draws features without replacement until m non-constant ones are found
  // (or the pool runs out), then scans them in ascending index order.
  Split best_split(std::size_t begin, std::size_t end, const std::vector<double>& counts, double parent) {
    std::vector<std::uint32_t> chosen;
    const std::size_t total = order_.size();
    for (std::size_t i = 0; i < total && chosen.size() < m_; ++i) {
      const std::size_t j = i + rng_.index(total - i);
      std::swap(order_[i], order_[j]);
      if (!is_constant(order_[i], begin, end)) chosen.push_back(order_[i]);
    }
    std::sort(chosen.begin(), chosen.end());

    Split best;
    const double n = static_cast<double>(end - begin);
    std::vector<double> left(n_classes_), right(n_classes_);
    auto consider = [&](std::uint32_t col, double threshold, double n_left) {
      for (std::size_t k = 0; k < n_classes_; ++k) right[k] = counts[k] - left[k];
      const double gain = parent - (n_left / n) * gini(left) - ((n - n_left) / n) * gini(right);
      if (gain > best.gain + 1e-12) {
        best.feature = static_cast<std::int32_t>(col);
        best.threshold = threshold;
        best.gain = gain;
      }
    };

    std::vector<std::pair<double, int>> sorted;
    for (std::uint32_t col : chosen) {
      std::fill(left.begin(), left.end(), 0.0);
      if (columns_.is_binary(col)) {
        const auto mask = columns_.mask(col);
        double n_left = 0.0;
        for (std::size_t i = begin; i < end; ++i)
          if (!mask[samples_[i]]) {
            left[static_cast<std::size_t>(labels_[samples_[i]])] += 1.0;
            n_left += 1.0;
          }
        consider(col, 0.5, n_left);
        continue;
      }
      const auto values = columns_.dense(col);
      sorted.clear();
      for (std::size_t i = begin; i < end; ++i) sorted.emplace_back(values[samples_[i]], labels_[samples_[i]]);
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left[static_cast<std::size_t>(sorted[i].second)] += 1.0;
        const double lo = sorted[i].first, hi = sorted[i + 1].first;
        if (hi <= lo) continue;
        double threshold = lo + (hi - lo) / 2.0;
        if (threshold >= hi) threshold = lo;
        consider(col, threshold, static_cast<double>(i + 1));
      }
    }
    return best;
  }

  std::size_t partition(std::size_t begin, std::size_t end, const Split& split) {
    const auto col = static_cast<std::size_t>(split.feature);
    auto goes_left = [&](std::uint32_t row) { return columns_.value(row, col) <= split.threshold; };
    auto mid = std::stable_partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                     samples_.begin() + static_cast<std::ptrdiff_t>(end), goes_left);
    return static_cast<std::size_t>(mid - samples_.begin());
  }

  const ColumnStore& columns_;
  std::span<const int> labels_;
  std::size_t n_classes_;
  const TreeParams& params_;
  Rng& rng_;
  std::vector<std::uint32_t> order_;
  std::size_t m_ = 0;
  std::vector<std::uint32_t> samples_;
};

}  // namespace

Tree grow_classification_tree(const ColumnStore& columns, std::span<const std::uint32_t> samples,
                              std::span<const int> labels, std::size_t n_classes, const TreeParams& params,
                              Rng& rng) {
  params.validate();
  if (samples.empty()) throw PreconditionError("cannot grow a tree from zero samples");
  if (labels.size() != columns.rows()) throw PreconditionError("labels and feature rows differ in length");
  for (std::uint32_t s : samples) {
    if (s >= columns.rows()) throw PreconditionError("sample index out of range");
    if (labels[s] < 0 || static_cast<std::size_t>(labels[s]) >= n_classes)
      throw ValueError(fmt::format("label {} out of range", labels[s]));
  }
  ClassificationGrower grower(columns, labels, n_classes, params, rng);
  return grower.grow(std::vector<std::uint32_t>(samples.begin(), samples.end()));
}

Tree fit_tree(const FeatureMatrix& matrix, std::span<const int> labels, std::size_t n_classes,
              const TreeParams& params, std::uint64_t seed) {
  ColumnStore columns(matrix);
  std::vector<std::uint32_t> samples(matrix.rows());
  std::iota(samples.begin(), samples.end(), 0u);
  Rng rng(seed);
  return grow_classification_tree(columns, samples, labels, n_classes, params, rng);
}

ProbVector tree_predict(const Tree& tree, const FeatureMatrix& matrix, std::size_t row) {
  return ProbVector{tree.leaf_for(matrix, row).value};
}

}  // namespace refscore
