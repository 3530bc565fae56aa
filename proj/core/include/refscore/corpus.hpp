#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace refscore {

enum class Gender { female, male, unknown };

std::string_view to_string(Gender g);

// One submitted journal article.
struct ArticleRecord {
  std::string id;
  std::string doi_group;
  int uoa = 1;
  int year = 0;
  std::optional<int> score;  // absent = unlabeled
  std::string title;
  std::string abstract;
  std::vector<std::string> keywords;
  std::string journal;
  std::string field_id;
  std::int64_t citations = 0;
  int n_authors = 1;
  int n_institutions = 1;
  int n_countries = 1;
  std::int64_t first_author_pubs = 0;
  double first_author_mnlcs = 0.0;
  double max_author_mnlcs = 0.0;
  std::optional<int> pages;
  std::string institution;
  std::optional<bool> ecr;
  std::optional<Gender> gender_label;
  std::optional<bool> interdisciplinary;
  // Journal citation impact when supplied by the source; otherwise it is
  // estimated from the training articles of the same journal.
  std::optional<double> journal_mnlcs;

  friend bool operator==(const ArticleRecord&, const ArticleRecord&) = default;
};

using Corpus = std::vector<ArticleRecord>;

enum class CorpusFormat { jsonl, csv };

CorpusFormat corpus_format_from_string(std::string_view name);

// Parses a corpus file. Throws SchemaError for a missing required column
// and ValueError for out-of-domain values; both name the 1-based row.
Corpus ingest_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus parse_jsonl(std::istream& in);
Corpus parse_csv(std::istream& in);

void write_jsonl(std::ostream& out, std::span<const ArticleRecord> corpus);
void write_csv(std::ostream& out, std::span<const ArticleRecord> corpus);

struct InclusionPolicy {
  int year_min = 2014;
  int year_max = 2018;
  std::size_t min_abstract_chars = 500;
  bool drop_score_zero = true;
  bool require_citation_record = false;
};

void validate(const InclusionPolicy& policy);

struct InclusionResult {
  Corpus kept;
  // Reason -> count. Reasons in evaluation order: year, abstract, score,
  // citation.
  std::map<std::string, std::size_t> dropped;
};

// Kept records carry cleaned title and abstract text.
InclusionResult apply_inclusion(std::span<const ArticleRecord> corpus, const InclusionPolicy& policy);

// Collapses every (uoa, doi_group) to its first record, carrying the median
// of the group's scores. When an even group has two different middle
// scores one is picked with a generator seeded from `seed`.
Corpus dedup_within_uoa(std::span<const ArticleRecord> corpus, std::uint64_t seed);

enum class AgreementScope { within_uoa, between_uoa };

struct GroupSizeAgreement {
  std::size_t pairs = 0;
  std::size_t agreeing = 0;
  double rate() const { return pairs == 0 ? 0.0 : static_cast<double>(agreeing) / static_cast<double>(pairs); }
};

struct AgreementReport {
  AgreementScope scope = AgreementScope::within_uoa;
  std::size_t n_groups = 0;   // doi groups contributing at least one pair
  std::size_t n_pairs = 0;
  std::size_t n_agreeing = 0;
  std::size_t n_agreeing_merged = 0;
  std::optional<double> agreement;         // nullopt = no qualifying pairs
  std::optional<double> agreement_merged;  // 1* and 2* treated as equal
  std::map<int, double> per_uoa;           // within scope only
  std::map<std::size_t, GroupSizeAgreement> by_group_size;
  std::optional<double> extrapolated_single;  // between scope only

  bool undefined() const { return !agreement.has_value(); }
};

// Pairwise score agreement among duplicate submissions. Expects the corpus
// before deduplication; unlabeled and 0* copies are ignored.
AgreementReport agreement_stats(std::span<const ArticleRecord> corpus, AgreementScope scope);

struct HomogeneityReport {
  std::optional<double> overall;  // nullopt when no journal has two articles
  std::map<int, std::optional<double>> per_uoa;
  std::size_t n_pairs = 0;
};

// Chance that two distinct articles from the same journal share a score,
// pooled over journals weighted by their pair counts.
HomogeneityReport journal_homogeneity(std::span<const ArticleRecord> corpus);

}  // namespace refscore
