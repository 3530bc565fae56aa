#pragma once

// Deliberately naive reference implementations used to cross-check the
// library. They share no code with it beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "refscore/corpus.hpp"
#include "refscore/features.hpp"
#include "refscore/forest.hpp"
#include "refscore/strategies.hpp"

namespace refscore::oracle {

struct Accuracy {
  double raw;
  double baseline;
};

inline Accuracy accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::size_t hits = 0;
  std::map<int, std::size_t> counts;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) ++hits;
    ++counts[truth[i]];
  }
  std::size_t best = 0;
  for (const auto& [cls, c] : counts) best = std::max(best, c);
  const auto n = static_cast<double>(pred.size());
  return {static_cast<double>(hits) / n, static_cast<double>(best) / n};
}

inline double power(const std::vector<int>& scores) {
  double sum = 0.0;
  for (int s : scores) {
    switch (s) {
      case 4: sum += 100.0; break;
      case 3: sum += 25.0; break;
      default: break;
    }
  }
  return sum / static_cast<double>(scores.size());
}

// Single-pass raw-sum formula in extended precision.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<long double>(x.size());
  if (x.size() < 2) return std::nullopt;
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double vx = n * sxx - sx * sx;
  const long double vy = n * syy - sy * sy;
  if (vx <= 1e-18L * n * sxx || vy <= 1e-18L * n * syy || vx <= 0 || vy <= 0) return std::nullopt;
  return static_cast<double>((n * sxy - sx * sy) / std::sqrt(vx * vy));
}

// Sum over the full 2 x C table of (observed - expected)^2 / expected.
inline double chi_square(const std::vector<std::uint8_t>& presence, const std::vector<int>& labels,
                         std::size_t n_classes) {
  std::vector<std::vector<double>> table(2, std::vector<double>(n_classes, 0.0));
  for (std::size_t i = 0; i < labels.size(); ++i) table[presence[i] ? 0 : 1][static_cast<std::size_t>(labels[i])] += 1;
  const auto n = static_cast<double>(labels.size());
  double stat = 0.0;
  for (std::size_t r = 0; r < 2; ++r) {
    double row = 0.0;
    for (double v : table[r]) row += v;
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double col = table[0][c] + table[1][c];
      const double expected = row * col / n;
      if (expected > 0.0) stat += (table[r][c] - expected) * (table[r][c] - expected) / expected;
    }
  }
  return stat;
}

struct Agreement {
  std::size_t pairs = 0;
  std::size_t agreeing = 0;
  std::size_t agreeing_merged = 0;
  std::map<int, std::pair<std::size_t, std::size_t>> per_uoa;  // pairs, agreeing
};

inline Agreement agreement(const Corpus& corpus, bool within) {
  Agreement out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (std::size_t j = i + 1; j < corpus.size(); ++j) {
      const auto& a = corpus[i];
      const auto& b = corpus[j];
      if (a.doi_group != b.doi_group) continue;
      if (!a.score || !b.score || *a.score == 0 || *b.score == 0) continue;
      if ((a.uoa == b.uoa) != within) continue;
      ++out.pairs;
      const int sa = *a.score, sb = *b.score;
      if (sa == sb) ++out.agreeing;
      if (std::max(sa, 2) == std::max(sb, 2)) ++out.agreeing_merged;
      if (within) {
        ++out.per_uoa[a.uoa].first;
        if (sa == sb) ++out.per_uoa[a.uoa].second;
      }
    }
  }
  return out;
}

inline std::optional<double> homogeneity(const Corpus& corpus, std::optional<int> uoa = std::nullopt) {
  std::size_t pairs = 0, same = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (std::size_t j = i + 1; j < corpus.size(); ++j) {
      const auto& a = corpus[i];
      const auto& b = corpus[j];
      if (!a.score || !b.score || a.journal != b.journal) continue;
      if (uoa && (a.uoa != *uoa || b.uoa != *uoa)) continue;
      ++pairs;
      if (*a.score == *b.score) ++same;
    }
  }
  if (pairs == 0) return std::nullopt;
  return static_cast<double>(same) / static_cast<double>(pairs);
}

inline std::vector<double> curve(std::vector<ScoredPrediction> items) {
  // Selection sort: repeatedly pick the most confident remaining item.
  std::vector<ScoredPrediction> sorted;
  while (!items.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < items.size(); ++i) {
      const auto& a = items[i];
      const auto& b = items[best];
      if (a.confidence > b.confidence || (a.confidence == b.confidence && a.id < b.id)) best = i;
    }
    sorted.push_back(items[best]);
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(best));
  }
  std::vector<double> out;
  for (std::size_t n = 1; n <= sorted.size(); ++n) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += sorted[i].correct ? 1 : 0;
    out.push_back(static_cast<double>(correct) / static_cast<double>(n));
  }
  return out;
}

inline std::vector<double> tree_leaf(const Tree& tree, const FeatureMatrix& m, std::size_t row) {
  std::size_t node = 0;
  while (tree.nodes[node].feature >= 0) {
    const auto& nd = tree.nodes[node];
    const double v = m.value(row, static_cast<std::size_t>(nd.feature));
    node = static_cast<std::size_t>(v <= nd.threshold ? nd.left : nd.right);
  }
  return tree.nodes[node].value;
}

inline std::vector<std::vector<double>> forest_proba(const ForestModel& model, const FeatureMatrix& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(model.n_classes, 0.0));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (const auto& tree : model.trees) {
      const auto leaf = tree_leaf(tree, m, r);
      for (std::size_t c = 0; c < model.n_classes; ++c) out[r][c] += leaf[c];
    }
    for (double& v : out[r]) v /= static_cast<double>(model.trees.size());
  }
  return out;
}

// Exhaustive best single split by Gini gain over every column and every
// midpoint between distinct sorted values.
struct BestSplit {
  double gain = 0.0;
  std::size_t feature = 0;
  double threshold = 0.0;
};

inline double gini_of(const std::vector<double>& counts) {
  double n = 0.0, sq = 0.0;
  for (double c : counts) n += c;
  if (n == 0.0) return 0.0;
  for (double c : counts) sq += (c / n) * (c / n);
  return 1.0 - sq;
}

inline BestSplit best_split(const FeatureMatrix& m, const std::vector<int>& y, std::size_t n_classes) {
  BestSplit best;
  std::vector<double> all(n_classes, 0.0);
  for (int v : y) all[static_cast<std::size_t>(v)] += 1;
  const double parent = gini_of(all);
  const auto n = static_cast<double>(y.size());
  for (std::size_t f = 0; f < m.cols(); ++f) {
    std::vector<double> values;
    for (std::size_t r = 0; r < m.rows(); ++r) values.push_back(m.value(r, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = 0.5 * (values[k] + values[k + 1]);
      std::vector<double> l(n_classes, 0.0), r(n_classes, 0.0);
      double nl = 0, nr = 0;
      for (std::size_t i = 0; i < m.rows(); ++i) {
        if (m.value(i, f) <= t) {
          l[static_cast<std::size_t>(y[i])] += 1;
          nl += 1;
        } else {
          r[static_cast<std::size_t>(y[i])] += 1;
          nr += 1;
        }
      }
      const double gain = parent - (nl / n) * gini_of(l) - (nr / n) * gini_of(r);
      if (gain > best.gain + 1e-12) best = {gain, f, t};
    }
  }
  return best;
}

}  // namespace refscore::oracle
