#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "refscore/tree.hpp"

namespace refscore {

struct BoostParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  TreeParams tree{std::size_t{3}, 2, FeatureRule::all, 0};
  // L2 penalty on leaf weights. 0 gives the classic gradient boosting
  // classifier (least-squares splits, Newton leaves); > 0 switches to
  // regularised second-order split gains.
  double l2 = 0.0;

  void validate() const;
};

struct BoostRound {
  std::vector<Tree> trees;  // one regression tree per class
  double step = 0.0;        // shrinkage actually applied
};

// Additive multinomial model: scores start at the log class frequencies and
// each round adds one regression tree per class fitted to the softmax
// residuals.
struct BoostModel {
  std::vector<double> initial;
  std::vector<BoostRound> rounds;
  // Training log-loss before the first round and after each round.
  std::vector<double> train_loss;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  BoostParams params;
};

// If a full learning-rate step would raise the training loss the step is
// halved until it does not (zero after 40 halvings), so train_loss never
// increases.
BoostModel fit_boost(const FeatureMatrix& matrix, std::span<const int> labels, std::size_t n_classes,
                     const BoostParams& params, std::uint64_t seed = 0);

std::vector<ProbVector> predict_proba(const BoostModel& model, const FeatureMatrix& matrix);

// Mean multinomial log-loss of raw scores (row-major n x C).
double multinomial_log_loss(std::span<const double> scores, std::span<const int> labels, std::size_t n_classes);

}  // namespace refscore
