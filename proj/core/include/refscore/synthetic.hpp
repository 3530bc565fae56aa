#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refscore/corpus.hpp"
#include "refscore/labels.hpp"

namespace refscore {

struct SyntheticUoa {
  int uoa = 1;
  std::size_t n_articles = 0;
  std::vector<double> class_prior;  // one entry per class, sums to 1
};

// Token planted into abstracts of one latent class with a fixed probability.
// Multi-word tokens are inserted as consecutive words.
struct PlantedToken {
  int cls = 0;
  std::string token;
  double probability = 0.0;
};

struct CitationModel {
  double mu = 1.0;
  double sigma = 1.0;
};

// Parameters of the synthetic corpus generator. The real peer-review labels
// are confidential, so every learner experiment in this repository runs on
// corpora drawn from this model, where the signal is known by construction.
struct SyntheticSpec {
  LabelMode label_mode = LabelMode::three_class;
  std::vector<SyntheticUoa> uoas;
  std::vector<PlantedToken> planted;
  std::vector<CitationModel> citations;  // per class
  std::size_t filler_vocabulary = 1500;
  std::size_t n_journals = 60;
  double journal_quality_bias = 0.5;
  std::size_t n_fields = 6;
  std::size_t n_institutions = 25;
  double institution_quality_spread = 0.5;
  int year_min = 2014;
  int year_max = 2018;
  double noise = 0.1;
  double duplicate_rate = 0.0;
  double cross_uoa_duplicate_share = 0.5;
  double duplicate_agreement = 0.9;
  double ecr_rate = 0.25;
  double female_rate = 0.4;
  double gender_unknown_rate = 0.1;
  double interdisciplinary_rate = 0.15;
  double missing_pages_rate = 0.1;
  // Vocabulary drift: from drift_start_year on, an article uses the planted
  // tokens of the next class with probability drift_rate * (year - start).
  double drift_rate = 0.0;
  int drift_start_year = 2014;

  std::size_t n_classes() const { return LabelScheme(label_mode).n_classes(); }

  // Throws ConfigError naming the offending field.
  void validate() const;

  static SyntheticSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Three-class single-UoA spec with strongly planted class vocabulary.
  static SyntheticSpec planted_demo(std::size_t n_articles, double noise);
};

// Deterministic given (spec, seed). Each article's latent class is drawn
// from its UoA prior tilted by institution quality; the published label
// equals the latent class except that with probability `noise` it is
// redrawn from the prior independently of everything else. When a class has
// planted tokens at least one of them is always present.
Corpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace refscore
