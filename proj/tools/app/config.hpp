#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refscore/corpus.hpp"
#include "refscore/features.hpp"
#include "refscore/labels.hpp"
#include "refscore/model.hpp"
#include "refscore/strategies.hpp"
#include "refscore/synthetic.hpp"

namespace refscore::app {

enum class StrategyKind { strategy1, strategy2, active_learning, cross_year };

std::string_view to_string(StrategyKind s);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::strategy1;
  SplitPlan plan;  // seed filled from RunConfig::seed
  double threshold = 0.85;
  ALConfig active;
  int train_year = 2014;
  std::vector<int> test_years;
};

struct HalfSampleConfig {
  std::size_t min_articles = 20;
  std::size_t iterations = 10;
};

// One run of the pipeline. Paths are resolved against the directory of the
// config file.
struct RunConfig {
  std::optional<std::filesystem::path> corpus_path;
  CorpusFormat corpus_format = CorpusFormat::jsonl;
  std::optional<SyntheticSpec> synthetic;
  LabelScheme scheme;
  InclusionPolicy inclusion;
  bool dedup = true;
  std::vector<int> uoas;  // empty: every UoA present
  FeatureConfig features;
  ModelSpec model;
  StrategyConfig strategy;
  std::optional<HalfSampleConfig> half_sample;
  std::size_t terms_top_n = 10;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "refscore-out";

  // Canonical resolved form. The output directory is deliberately left out
  // so that bundles written to different places compare equal.
  nlohmann::json to_json() const;
};

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace refscore::app
