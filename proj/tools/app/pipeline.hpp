#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "bundle.hpp"
#include "config.hpp"
#include "refscore/errors.hpp"

namespace refscore::app {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Runs `f`, prefixing any library error with the pipeline stage it came
// from. The exception type (and so the exit code) is preserved.
template <class F>
auto in_stage(std::string_view stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError& e) {
    throw SchemaError(fmt::format("[{}] {}", stage, e.what()));
  } catch (const ValueError& e) {
    throw ValueError(fmt::format("[{}] {}", stage, e.what()));
  } catch (const LookupError& e) {
    throw LookupError(fmt::format("[{}] {}", stage, e.what()));
  } catch (const PreconditionError& e) {
    throw PreconditionError(fmt::format("[{}] {}", stage, e.what()));
  } catch (const DataError& e) {
    throw DataError(fmt::format("[{}] {}", stage, e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("[{}] {}", stage, e.what()));
  } catch (const Error& e) {
    throw Error(fmt::format("[{}] {}", stage, e.what()));
  }
}

struct PreparedCorpus {
  std::size_t n_input = 0;
  std::map<int, std::size_t> input_by_uoa;
  std::map<int, std::size_t> included_by_uoa;
  std::map<std::string, std::size_t> dropped;
  std::size_t n_included = 0;
  Corpus corpus;  // after inclusion and, if requested, deduplication
};

Corpus load_source(const RunConfig& config);
PreparedCorpus prepare_corpus(const RunConfig& config, bool dedup);

std::string synth_jsonl(const SyntheticSpec& spec, std::uint64_t seed);

// Full pipeline: ingest, filter, dedup, featurize, strategy, evaluation.
Bundle build_run_bundle(const RunConfig& config);
// Per-class chi-square term association.
Bundle build_terms_bundle(const RunConfig& config);
// Duplicate-score agreement on the filtered corpus before deduplication.
Bundle build_agreement_bundle(const RunConfig& config);
// Same-journal score agreement on the filtered, deduplicated corpus.
Bundle build_homogeneity_bundle(const RunConfig& config);

}  // namespace refscore::app
