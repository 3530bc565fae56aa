#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "refscore/boost.hpp"
#include "refscore/forest.hpp"

namespace refscore {

enum class LearnerKind { baseline, forest, boost, xgb };

// Learner choice plus hyperparameters. Names follow the usual short codes:
// rfc, gbc, xgb, an "o" suffix for the ordinal variant, and baseline.
struct ModelSpec {
  LearnerKind learner = LearnerKind::forest;
  bool ordinal = false;
  ForestParams forest;
  BoostParams boost;

  static ModelSpec from_name(std::string_view name);
  std::string name() const;
  void validate() const;
  // Boost parameters with the xgb L2 term applied when relevant.
  BoostParams effective_boost() const;
};

// Constant classifier predicting the most frequent training class.
struct BaselineModel {
  std::vector<double> frequencies;
  int modal = 0;
  std::size_t n_features = 0;
};

BaselineModel baseline_modal(std::span<const int> labels, std::size_t n_classes, std::size_t n_features = 0);
std::vector<ProbVector> predict_proba(const BaselineModel& model, const FeatureMatrix& matrix);

using BinaryModel = std::variant<BaselineModel, ForestModel, BoostModel>;

// Ordinal decomposition: task t (t = 1..C-1) estimates P(class >= t).
struct OrdinalModel {
  std::vector<BinaryModel> tasks;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
};

OrdinalModel fit_ordinal(const ModelSpec& base, const FeatureMatrix& matrix, std::span<const int> labels,
                         std::size_t n_classes, std::uint64_t seed);
std::vector<ProbVector> predict_proba(const OrdinalModel& model, const FeatureMatrix& matrix);

// Combines cumulative estimates at_least[t-1] = P(class >= t) into class
// probabilities: raw_k = max(0, P(>=k) - P(>=k+1)) with P(>=0) = 1 and
// P(>=C) = 0, renormalised. For three classes with a = P(>=3*) and
// b = P(4*) this is (1 - a, max(0, a - b), b) / sum.
ProbVector combine_ordinal(std::span<const double> at_least);

using Model = std::variant<BaselineModel, ForestModel, BoostModel, OrdinalModel>;

Model fit_model(const ModelSpec& spec, const FeatureMatrix& matrix, std::span<const int> labels,
                std::size_t n_classes, std::uint64_t seed);

// Throws PreconditionError when the column count differs from training.
std::vector<ProbVector> predict_proba(const Model& model, const FeatureMatrix& matrix);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

}  // namespace refscore
