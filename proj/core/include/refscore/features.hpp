#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "refscore/corpus.hpp"
#include "refscore/labels.hpp"
#include "refscore/text.hpp"

namespace refscore {

// ---------------------------------------------------------------------------
// Citation normalisation
// ---------------------------------------------------------------------------

struct FieldYearCell {
  double mean_log_citations = 0.0;  // mean of ln(1 + citations)
  std::size_t count = 0;
};

struct FieldYearStats {
  std::map<std::pair<std::string, int>, FieldYearCell> cells;

  const FieldYearCell* find(const std::string& field_id, int year) const;

  // Adds cells present in `corpus` but absent here. Citation counts carry
  // no label information, so this is used to cover test articles whose
  // field-year cell has no training article.
  void fill_missing(std::span<const ArticleRecord> corpus);
};

FieldYearStats field_year_stats(std::span<const ArticleRecord> corpus);
FieldYearStats field_year_stats(std::span<const ArticleRecord> corpus, std::span<const std::size_t> rows);

// Normalised log-transformed citation score: ln(1 + c) over the mean of
// the same quantity in the article's field-year cell; 1.0 when that mean is
// zero. Throws LookupError if the cell is missing.
double nlcs(std::int64_t citations, const std::string& field_id, int year, const FieldYearStats& stats);

// Mean NLCS per journal over a set of articles.
struct JournalStats {
  std::map<std::string, double> mnlcs;
  double fallback = 1.0;  // used for journals without training articles

  // Ingested journal impact wins over the estimate.
  double lookup(const ArticleRecord& article) const;
};

JournalStats journal_stats(std::span<const ArticleRecord> corpus, std::span<const std::size_t> rows,
                           const FieldYearStats& stats);

// ---------------------------------------------------------------------------
// Missing-value imputation
// ---------------------------------------------------------------------------

double median(std::vector<double> values);

// Per-UoA medians with a global fallback; missing values are replaced by
// the median of the article's UoA.
struct Imputations {
  std::map<int, double> pages_by_uoa;
  double pages_global = 0.0;
  std::map<int, double> readability_by_uoa;
  double readability_global = 0.0;
  bool pages_unavailable = false;        // no article had a page count
  bool readability_unavailable = false;  // no article had a readable abstract

  double pages_for(const ArticleRecord& article) const;
  double readability_for(const ArticleRecord& article) const;
  double readability_for(int uoa, std::optional<double> measured) const;
};

Imputations compute_imputations(std::span<const ArticleRecord> corpus);

std::vector<double> impute_pages(std::span<const ArticleRecord> corpus);

// ---------------------------------------------------------------------------
// Term statistics
// ---------------------------------------------------------------------------

// Pearson chi-square of the 2 x C (present/absent x class) table, without
// continuity correction. Throws PreconditionError when fewer than two
// classes occur in `labels`.
double chi_square(std::span<const std::uint8_t> presence, std::span<const int> labels, std::size_t n_classes);

// Same statistic from per-class presence counts and class sizes.
double chi_square_counts(std::span<const std::size_t> present, std::span<const std::size_t> class_totals);

// Class with the highest observed/expected presence ratio; ties go to the
// lower class.
int association_direction(std::span<const std::size_t> present, std::span<const std::size_t> class_totals);

// Interned presence sets of n-grams (and journal names) per article.
class TermIndex {
 public:
  TermIndex() = default;
  explicit TermIndex(std::span<const ArticleRecord> corpus, bool include_journals = true);

  std::size_t n_articles() const { return article_terms_.size(); }
  std::size_t n_terms() const { return terms_.size(); }
  const Term& term(std::uint32_t id) const { return terms_[id]; }
  std::optional<std::uint32_t> find(const Term& term) const;
  std::span<const std::uint32_t> article_terms(std::size_t row) const { return article_terms_[row]; }

 private:
  std::vector<Term> terms_;
  std::unordered_map<Term, std::uint32_t, TermHash> lookup_;
  std::vector<std::vector<std::uint32_t>> article_terms_;
};

// Terms of one article (n-grams plus its journal name), sorted.
std::vector<Term> article_terms(const ArticleRecord& article, bool include_journal = true);

struct VocabEntry {
  Term term;
  double chi2 = 0.0;
  int direction = 0;
};

struct Vocabulary {
  std::vector<VocabEntry> entries;  // chi2 descending, ties lexicographic
  std::size_t requested = 0;
  bool shortfall = false;
};

// Chooses the k_total - n_biblio terms with the largest chi-square over
// `rows` (training rows only). Journal names compete in the same pool.
Vocabulary select_features(const TermIndex& index, std::span<const std::size_t> rows, std::span<const int> labels,
                           std::size_t n_classes, std::size_t k_total, std::size_t n_biblio);

struct TermAssociation {
  int cls = 0;
  Term term;
  double chi2 = 0.0;
  int direction = 0;
};

// Per class, the top_n terms whose presence is most over-represented in that
// class, by chi-square. Terms with zero chi-square are omitted.
std::vector<TermAssociation> term_association_report(const TermIndex& index, std::span<const std::size_t> rows,
                                                     std::span<const int> labels, std::size_t n_classes,
                                                     std::size_t top_n);

// ---------------------------------------------------------------------------
// Feature matrix
// ---------------------------------------------------------------------------

enum class InputSet : int { bibliometric = 1, journal = 2, text = 3 };

InputSet input_set_from_int(int value);
std::size_t dense_column_count(InputSet set);
std::span<const std::string> bibliometric_column_names();

// Dense bibliometric block (row-major) plus binary text columns stored as
// per-row sorted column lists.
struct FeatureMatrix {
  InputSet input_set = InputSet::bibliometric;
  std::vector<std::string> row_ids;
  std::vector<std::string> column_names;
  std::size_t n_dense = 0;
  std::vector<double> dense;
  std::vector<std::vector<std::uint32_t>> text;  // indices into the text block

  std::size_t rows() const { return row_ids.size(); }
  std::size_t cols() const { return column_names.size(); }
  std::size_t n_text() const { return cols() - n_dense; }
  bool is_text(std::size_t col) const { return col >= n_dense; }
  double value(std::size_t row, std::size_t col) const;

  FeatureMatrix subset(std::span<const std::size_t> rows) const;
};

// Builds rows for every article. `vocabulary` is required for input set 3
// and ignored otherwise; `journals` is required for input sets 2 and 3.
// `index`, when given, must be aligned with `corpus` and saves re-tokenising.
FeatureMatrix build_matrix(std::span<const ArticleRecord> corpus, InputSet input_set, const FieldYearStats& stats,
                           const JournalStats* journals, const Vocabulary* vocabulary, const Imputations& imputations,
                           const TermIndex* index = nullptr);

void write_matrix_csv(std::ostream& out, const FeatureMatrix& matrix);
void write_vocabulary_csv(std::ostream& out, const Vocabulary& vocabulary, const LabelScheme& scheme);

struct FeatureConfig {
  InputSet input_set = InputSet::text;
  std::size_t k_total = 1000;
};

// Label-free per-corpus state (tokenisation, imputations) shared by every
// train/test split of one experiment.
class Featurizer {
 public:
  Featurizer(std::span<const ArticleRecord> corpus, FeatureConfig config);

  const FeatureConfig& config() const { return config_; }
  const TermIndex& terms() const { return terms_; }
  const Imputations& imputations() const { return imputations_; }

  struct Fitted {
    FieldYearStats stats;
    JournalStats journals;
    Vocabulary vocabulary;
  };

  // Citation statistics and vocabulary from the training rows only.
  Fitted fit(std::span<const ArticleRecord> corpus, std::span<const std::size_t> train_rows,
             std::span<const int> labels, std::size_t n_classes) const;

  // Matrix over the whole corpus using a fitted state.
  FeatureMatrix build(std::span<const ArticleRecord> corpus, const Fitted& fitted) const;

 private:
  FeatureConfig config_;
  TermIndex terms_;
  Imputations imputations_;
};

}  // namespace refscore
