#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refscore/corpus.hpp"

namespace refscore {

struct AccuracyResult {
  double raw = 0.0;
  double baseline = 0.0;        // frequency of the modal true class
  double above_baseline = 0.0;  // raw - baseline
};

// Throws PreconditionError on empty or misaligned input.
AccuracyResult accuracy(std::span<const int> predictions, std::span<const int> truths);

// Mean funding weight (4* = 100, 3* = 25, otherwise 0) of star scores.
double research_power(std::span<const int> scores);

struct Stat {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Stat stat_of(std::span<const double> values);

// One article in an institutional comparison: human and AI star scores.
struct InstitutionArticle {
  std::string institution;
  int human = 0;
  int predicted = 0;
};

struct InstitutionShift {
  std::string institution;
  double mean_articles = 0.0;  // articles per iteration
  double human_power = 0.0;    // mean over iterations
  double ai_power = 0.0;
  Stat gain;                   // ai - human, percentage points
  Stat overall_gain;           // gain x predicted fraction
  std::size_t iterations = 0;  // iterations with at least one article
};

struct ShiftReport {
  std::vector<InstitutionShift> institutions;  // sorted by institution id
  std::vector<std::string> excluded;           // roster entries with no articles
};

// Per iteration, `iterations[i]` lists the AI-predicted articles and
// `predicted_fractions[i]` the share of all articles they represent.
ShiftReport institutional_shift(const std::vector<std::vector<InstitutionArticle>>& iterations,
                                std::span<const double> predicted_fractions,
                                std::span<const std::string> roster = {});

// Sample Pearson correlation; nullopt for length < 2 or zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

enum class CorrelationMode { average, total };

struct UoaInstitutionScore {
  int uoa = 0;
  std::string institution;
  int human = 0;
  int predicted = 0;
};

// Per UoA: Pearson over institutions of mean (average mode) or summed
// (total mode) funding weight, human vs predicted.
std::map<int, std::optional<double>> institution_correlations(std::span<const UoaInstitutionScore> articles,
                                                              CorrelationMode mode);

struct GpaOutput {
  std::string id;
  std::string institution;
  int human = 0;  // star score 1..4
};

struct RankShift {
  std::string institution;
  double human_gpa = 0.0;
  std::size_t human_rank = 0;  // 1 = best
  Stat ai_gpa;
  Stat rank_delta;             // human_rank - ai_rank; positive = moved up
};

struct RankShiftReport {
  std::vector<RankShift> institutions;  // sorted by institution id
  std::vector<std::vector<int>> deltas; // per iteration, same order
};

// GPA = mean star score with 1* counted as 2*. Each substitution map
// replaces the human scores of the listed output ids for one iteration.
// Ranks order GPA descending with ties by institution id.
RankShiftReport gpa_rank_shift(std::span<const GpaOutput> outputs,
                               const std::vector<std::map<std::string, int>>& substitutions);

struct SubgroupArticle {
  std::optional<std::string> group;  // nullopt = unknown, excluded
  int human = 0;
  int predicted = 0;
};

struct SubgroupShift {
  std::string group;
  Stat gain;  // per-iteration mean of weight(pred) - weight(human)
  std::size_t articles = 0;  // summed over iterations
};

struct SubgroupShiftReport {
  std::vector<SubgroupShift> groups;
  std::vector<std::string> empty_groups;
};

SubgroupShiftReport subgroup_shift(const std::vector<std::vector<SubgroupArticle>>& iterations,
                                   std::span<const std::string> groups);

struct SizeQualityCorrelations {
  std::optional<double> institution_size;
  std::optional<double> submission_size;
  std::optional<double> mean_power;
};

SizeQualityCorrelations size_quality_correlations(std::span<const double> gain, std::span<const double> institution_size,
                                                  std::span<const double> submission_size,
                                                  std::span<const double> mean_power);

struct HalfSampleEstimate {
  int uoa = 0;
  std::string institution;
  std::size_t n_articles = 0;
  double true_power = 0.0;
  std::vector<double> estimates;
  Stat estimate;
};

// For institutions (per UoA) with at least `min_articles` scored articles,
// repeatedly scores a random half without replacement and reports the
// spread of the estimated power.
std::vector<HalfSampleEstimate> half_sample_doubling(std::span<const ArticleRecord> corpus,
                                                     std::size_t min_articles, std::size_t n_iterations,
                                                     std::uint64_t seed);

struct BlendedAccuracy {
  double eligible = 0.0;
  double all_articles = 0.0;
};

// Human-scored share h is taken as exact, the rest scored at accuracy a;
// eligible articles form `eligible_fraction` of all articles and the
// ineligible remainder is human scored.
BlendedAccuracy blend_overall_accuracy(double human_fraction, double ai_accuracy, double eligible_fraction);

}  // namespace refscore
