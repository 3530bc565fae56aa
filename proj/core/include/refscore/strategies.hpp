#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refscore/corpus.hpp"
#include "refscore/features.hpp"
#include "refscore/labels.hpp"
#include "refscore/model.hpp"

namespace refscore {

// A fully labelled corpus together with its label-free feature state.
// The labels double as the oracle for held-out evaluation.
class Experiment {
 public:
  Experiment(Corpus corpus, LabelScheme scheme, FeatureConfig features);

  const Corpus& corpus() const { return corpus_; }
  const LabelScheme& scheme() const { return scheme_; }
  const std::vector<int>& labels() const { return labels_; }
  std::size_t size() const { return corpus_.size(); }
  std::size_t n_classes() const { return scheme_.n_classes(); }
  const Featurizer& featurizer() const { return featurizer_; }

  // Feature matrix for all rows with statistics fitted on `train_rows`.
  FeatureMatrix matrix_for(std::span<const std::size_t> train_rows) const;

 private:
  Corpus corpus_;
  LabelScheme scheme_;
  std::vector<int> labels_;
  Featurizer featurizer_;
};

struct SplitPlan {
  double train_fraction = 0.5;
  std::size_t n_iterations = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Provenance { human, ai };

std::string_view to_string(Provenance p);

struct ArticlePrediction {
  int final_class = 0;               // human label or AI prediction
  std::optional<int> model_class;    // model output when the article was predicted
  double confidence = 0.0;           // max-class probability, 0 if not predicted
  Provenance provenance = Provenance::human;
};

struct CurvePoint {
  std::size_t n = 0;
  double accuracy = 0.0;
};

struct IterationOutcome {
  std::string model_id;
  std::uint64_t seed = 0;
  bool resampled = false;
  std::vector<ArticlePrediction> articles;  // aligned with the corpus
  std::size_t n_train = 0;
  std::size_t n_human = 0;
  std::size_t n_ai = 0;
  double test_accuracy = 0.0;        // over every model-predicted article
  double test_baseline = 0.0;        // training-modal class on the same articles
  std::optional<double> ai_accuracy; // over AI-provenance articles

  // Strategy 2 only.
  std::vector<CurvePoint> curve;
  std::size_t deployment_n_ai = 0;
  std::optional<double> deployment_accuracy;
};

struct Range {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Range summarize(std::span<const double> values);

struct StrategyOutcome {
  std::string strategy;
  std::vector<IterationOutcome> iterations;
  Range accuracy;  // headline accuracy per strategy (see each runner)
  Range baseline;
};

// Uniform train/test split per iteration; test articles are predicted by
// the model. Headline accuracy = test accuracy.
StrategyOutcome run_strategy1(const Experiment& experiment, const ModelSpec& spec, const SplitPlan& plan);

struct ScoredPrediction {
  std::string id;
  double confidence = 0.0;
  bool correct = false;
};

// Cumulative accuracy after sorting by confidence descending (ties by id).
std::vector<CurvePoint> prob_accuracy_curve(std::span<const ScoredPrediction> predictions);

// Largest n whose cumulative accuracy reaches the threshold; 0 if none.
std::size_t count_at_threshold(std::span<const CurvePoint> curve, double threshold);

// Like strategy 1, but only the most confident prefix of test predictions
// that meets `threshold` (measured against the oracle) is AI-scored; the
// rest are returned to human assessors. The deployment-mode alternative
// (keep predictions whose own probability >= threshold) is recorded too.
// Headline accuracy = realised accuracy of the AI set.
StrategyOutcome run_strategy2(const Experiment& experiment, const ModelSpec& spec, const SplitPlan& plan,
                              double threshold);

struct ALConfig {
  double batch_fraction = 0.10;
  double accuracy_threshold = 0.85;
  std::size_t max_batches = 9;
  bool refresh_features = true;  // refit feature selection every round

  void validate() const;
};

struct ALRound {
  std::size_t labeled = 0;
  std::vector<std::string> selected_ids;       // batch labeled in this round
  double estimated_accuracy = 0.0;            // mean max-class probability
  std::optional<double> realized_accuracy;    // against the oracle
  bool stop = false;
};

struct ALTrace {
  std::vector<ALRound> rounds;
  bool stopped_early = false;
  std::size_t final_labeled = 0;
};

struct ActiveLearningResult {
  std::vector<ALTrace> traces;  // one per iteration
  StrategyOutcome outcome;
};

// Batch active learning. Round 0 labels a random batch; each later round
// labels the least-confident batch of the remainder. Stops as soon as the
// remainder is predicted at >= threshold (AI scores the remainder), or
// after max_batches rounds, when humans score everything. Headline
// accuracy = remainder accuracy at the stop (1.0 when humans scored all).
ActiveLearningResult run_active_learning(const Experiment& experiment, const ModelSpec& spec,
                                         const ALConfig& config, const SplitPlan& plan);

struct CrossYearResult {
  int train_year = 0;
  std::map<int, Range> accuracy_by_year;
  std::vector<int> skipped_years;
};

// Models trained on half of train_year (per iteration) are evaluated on the
// other half of train_year and on all articles of each test year.
CrossYearResult cross_year(const Corpus& corpus, const LabelScheme& scheme, const FeatureConfig& features,
                           const ModelSpec& spec, int train_year, std::span<const int> test_years,
                           std::size_t n_iterations, std::uint64_t seed);

}  // namespace refscore
