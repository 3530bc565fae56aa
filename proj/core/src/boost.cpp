#include "refscore/boost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "refscore/errors.hpp"
#include "refscore/parallel.hpp"

namespace refscore {

void BoostParams::validate() const {
  if (n_rounds == 0) throw ConfigError("boosting needs at least one round");
  if (!(learning_rate > 0.0) || learning_rate > 1.0) throw ConfigError("learning_rate must be in (0, 1]");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  tree.validate();
}

namespace {

constexpr int kMaxHalvings = 40;

void softmax_row(std::span<const double> scores, std::span<double> out) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - top);
    total += out[k];
  }
  for (double& v : out) v /= total;
}

// Level-wise regression tree on gradients r and hessians h over every row.
class RegressionGrower {
 public:
  RegressionGrower(const ColumnStore& columns, const std::vector<std::vector<std::uint32_t>>& sorted_dense,
                   const BoostParams& params, double leaf_scale)
      : columns_(columns), sorted_dense_(sorted_dense), params_(params), leaf_scale_(leaf_scale) {}

  Tree grow(std::span<const double> r, std::span<const double> h, std::span<const std::uint32_t> features) const {
    const std::size_t n = columns_.rows();
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<std::int32_t> node_of(n, 0);
    std::vector<std::int32_t> frontier{0};
    std::vector<Stats> stats(1);
    for (std::size_t i = 0; i < n; ++i) stats[0].add(r[i], h[i]);

    for (std::size_t depth = 0; !frontier.empty(); ++depth) {
      const bool depth_ok = !params_.tree.max_depth || depth < *params_.tree.max_depth;
      std::vector<Split> best(tree.nodes.size());
      std::vector<char> active(tree.nodes.size(), 0);
      bool any_active = false;
      for (std::int32_t id : frontier) {
        const auto& s = stats[static_cast<std::size_t>(id)];
        if (depth_ok && s.count >= static_cast<double>(params_.tree.min_samples_split)) {
          active[static_cast<std::size_t>(id)] = 1;
          any_active = true;
        }
      }
      if (any_active) {
        for (std::uint32_t col : features) scan_column(col, r, h, node_of, stats, active, best);
      }

      std::vector<std::int32_t> next;
      std::vector<std::int32_t> left_of(tree.nodes.size(), -1);
      for (std::int32_t id : frontier) {
        const auto idx = static_cast<std::size_t>(id);
        if (!active[idx] || best[idx].feature < 0) {
          tree.nodes[idx].value = {leaf_value(stats[idx])};
          continue;
        }
        const auto left = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.resize(tree.nodes.size());
        auto& node = tree.nodes[idx];
        node.feature = best[idx].feature;
        node.threshold = best[idx].threshold;
        node.gain = best[idx].gain;
        node.left = left;
        node.right = left + 1;
        left_of[idx] = left;
        next.push_back(left);
        next.push_back(left + 1);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto cur = node_of[i];
        if (cur < 0) continue;
        const auto idx = static_cast<std::size_t>(cur);
        if (left_of[idx] < 0) {
          node_of[i] = -1;
          continue;
        }
        const auto& node = tree.nodes[idx];
        const bool go_left = columns_.value(i, static_cast<std::size_t>(node.feature)) <= node.threshold;
        node_of[i] = go_left ? node.left : node.right;
        stats[static_cast<std::size_t>(node_of[i])].add(r[i], h[i]);
      }
      frontier = std::move(next);
    }
    return tree;
  }

 private:
  struct Stats {
    double g = 0.0, h = 0.0, count = 0.0;
    void add(double gi, double hi) {
      g += gi;
      h += hi;
      count += 1.0;
    }
  };

  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  double score(const Stats& s) const {
    if (params_.l2 > 0.0) return s.g * s.g / (s.h + params_.l2);
    return s.count > 0.0 ? s.g * s.g / s.count : 0.0;
  }

  double leaf_value(const Stats& s) const {
    if (params_.l2 > 0.0) return s.g / (s.h + params_.l2);
    if (s.h < 1e-150) return 0.0;
    return leaf_scale_ * s.g / s.h;
  }

  void consider(std::uint32_t col, double threshold, const Stats& left, const Stats& total, Split& best) const {
    if (left.count <= 0.0 || left.count >= total.count) return;
    const Stats right{total.g - left.g, total.h - left.h, total.count - left.count};
    const double gain = score(left) + score(right) - score(total);
    if (gain > best.gain + 1e-12) best = {static_cast<std::int32_t>(col), threshold, gain};
  }

  void scan_column(std::uint32_t col, std::span<const double> r, std::span<const double> h,
                   const std::vector<std::int32_t>& node_of, const std::vector<Stats>& stats,
                   const std::vector<char>& active, std::vector<Split>& best) const {
    const std::size_t m = active.size();
    if (columns_.is_binary(col)) {
      std::vector<Stats> ones(m);
      for (std::uint32_t row : columns_.nonzeros(col)) {
        const auto nd = node_of[row];
        if (nd >= 0 && active[static_cast<std::size_t>(nd)]) ones[static_cast<std::size_t>(nd)].add(r[row], h[row]);
      }
      for (std::size_t id = 0; id < m; ++id) {
        if (!active[id] || ones[id].count == 0.0) continue;
        const Stats& t = stats[id];
        const Stats zeros{t.g - ones[id].g, t.h - ones[id].h, t.count - ones[id].count};
        consider(col, 0.5, zeros, t, best[id]);
      }
      return;
    }
    const auto values = columns_.dense(col);
    std::vector<Stats> left(m);
    std::vector<double> last(m, 0.0);
    std::vector<char> seen(m, 0);
    for (std::uint32_t row : sorted_dense_[col]) {
      const auto nd = node_of[row];
      if (nd < 0) continue;
      const auto id = static_cast<std::size_t>(nd);
      if (!active[id]) continue;
      const double v = values[row];
      if (seen[id] && v > last[id]) {
        double threshold = last[id] + (v - last[id]) / 2.0;
        if (threshold >= v) threshold = last[id];
        consider(col, threshold, left[id], stats[id], best[id]);
      }
      left[id].add(r[row], h[row]);
      last[id] = v;
      seen[id] = 1;
    }
  }

  const ColumnStore& columns_;
  const std::vector<std::vector<std::uint32_t>>& sorted_dense_;
  const BoostParams& params_;
  double leaf_scale_;
};

double tree_output(const Tree& tree, const ColumnStore& columns, std::size_t row) {
  std::size_t at = 0;
  while (tree.nodes[at].feature >= 0) {
    const auto& n = tree.nodes[at];
    at = static_cast<std::size_t>(columns.value(row, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left
                                                                                                         : n.right);
  }
  return tree.nodes[at].value[0];
}

std::vector<double> initial_scores(std::span<const int> labels, std::size_t n_classes) {
  std::vector<double> freq(n_classes, 0.0);
  for (int y : labels) freq[static_cast<std::size_t>(y)] += 1.0;
  std::vector<double> init(n_classes);
  for (std::size_t k = 0; k < n_classes; ++k)
    init[k] = std::log(std::max(freq[k] / static_cast<double>(labels.size()), 1e-12));
  return init;
}

}  // namespace

double multinomial_log_loss(std::span<const double> scores, std::span<const int> labels, std::size_t n_classes) {
  if (scores.size() != labels.size() * n_classes) throw PreconditionError("score and label sizes disagree");
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = scores.subspan(i * n_classes, n_classes);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double s : row) sum += std::exp(s - top);
    total += top + std::log(sum) - row[static_cast<std::size_t>(labels[i])];
  }
  return total / static_cast<double>(labels.size());
}

BoostModel fit_boost(const FeatureMatrix& matrix, std::span<const int> labels, std::size_t n_classes,
                     const BoostParams& params, std::uint64_t seed) {
  params.validate();
  const std::size_t n = matrix.rows();
  if (n == 0) throw PreconditionError("cannot fit boosting on zero rows");
  if (labels.size() != n) throw PreconditionError("labels and feature rows differ in length");
  if (n_classes < 2) throw PreconditionError("boosting needs at least two classes");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw ValueError(fmt::format("label {} out of range", y));
  if (std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels.front(); }))
    throw PreconditionError("boosting needs at least two classes among the training labels");

  const ColumnStore columns(matrix);
  std::vector<std::vector<std::uint32_t>> sorted_dense(matrix.n_dense);
  for (std::size_t c = 0; c < matrix.n_dense; ++c) {
    auto& order = sorted_dense[c];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    const auto values = columns.dense(c);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
  }

  BoostModel model;
  model.n_classes = n_classes;
  model.n_features = matrix.cols();
  model.params = params;
  model.initial = initial_scores(labels, n_classes);

  const double leaf_scale = static_cast<double>(n_classes - 1) / static_cast<double>(n_classes);
  const RegressionGrower grower(columns, sorted_dense, params, leaf_scale);
  Rng rng(seed);
  const std::size_t per_tree = params.tree.features_per_split(matrix.cols());

  std::vector<double> scores(n * n_classes);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(model.initial.begin(), model.initial.end(), scores.begin() + static_cast<std::ptrdiff_t>(i * n_classes));
  double loss = multinomial_log_loss(scores, labels, n_classes);
  model.train_loss.push_back(loss);

  std::vector<double> prob(n * n_classes);
  std::vector<std::vector<double>> residual(n_classes, std::vector<double>(n));
  std::vector<std::vector<double>> hessian(n_classes, std::vector<double>(n));
  std::vector<double> outputs(n * n_classes);
  std::vector<double> candidate(n * n_classes);
  std::vector<std::uint32_t> all_features(matrix.cols());
  std::iota(all_features.begin(), all_features.end(), 0u);

  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      auto p = std::span<double>(prob).subspan(i * n_classes, n_classes);
      softmax_row(std::span<const double>(scores).subspan(i * n_classes, n_classes), p);
      for (std::size_t k = 0; k < n_classes; ++k) {
        residual[k][i] = (labels[i] == static_cast<int>(k) ? 1.0 : 0.0) - p[k];
        hessian[k][i] = p[k] * (1.0 - p[k]);
      }
    }

    std::vector<std::vector<std::uint32_t>> features(n_classes);
    for (std::size_t k = 0; k < n_classes; ++k) {
      if (per_tree >= all_features.size()) {
        features[k] = all_features;
        continue;
      }
      auto pool = all_features;
      for (std::size_t i = 0; i < per_tree; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
      pool.resize(per_tree);
      std::sort(pool.begin(), pool.end());
      features[k] = std::move(pool);
    }

    BoostRound step_round;
    step_round.trees.resize(n_classes);
    parallel_for(n_classes, [&](std::size_t k) {
      step_round.trees[k] = grower.grow(residual[k], hessian[k], features[k]);
      for (std::size_t i = 0; i < n; ++i) outputs[i * n_classes + k] = tree_output(step_round.trees[k], columns, i);
    });

    double step = params.learning_rate;
    double next_loss = loss;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      for (std::size_t j = 0; j < candidate.size(); ++j) candidate[j] = scores[j] + step * outputs[j];
      next_loss = multinomial_log_loss(candidate, labels, n_classes);
      if (next_loss <= loss) break;
      step /= 2.0;
    }
    if (next_loss > loss) {
      step = 0.0;
      next_loss = loss;
    } else {
      scores.swap(candidate);
    }
    step_round.step = step;
    loss = next_loss;
    model.train_loss.push_back(loss);
    model.rounds.push_back(std::move(step_round));
  }
  return model;
}

std::vector<ProbVector> predict_proba(const BoostModel& model, const FeatureMatrix& matrix) {
  std::vector<ProbVector> out(matrix.rows());
  parallel_for(matrix.rows(), [&](std::size_t r) {
    std::vector<double> s = model.initial;
    for (const auto& round : model.rounds) {
      if (round.step == 0.0) continue;
      for (std::size_t k = 0; k < model.n_classes; ++k) s[k] += round.step * round.trees[k].leaf_for(matrix, r).value[0];
    }
    std::vector<double> p(model.n_classes);
    softmax_row(s, p);
    out[r].p = std::move(p);
  });
  return out;
}

}  // namespace refscore
