#include "refscore/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "refscore/errors.hpp"

namespace refscore {

// ---------------------------------------------------------------------------
// Citation normalisation

const FieldYearCell* FieldYearStats::find(const std::string& field_id, int year) const {
  auto it = cells.find({field_id, year});
  return it == cells.end() ? nullptr : &it->second;
}

namespace {

void accumulate_cells(std::map<std::pair<std::string, int>, FieldYearCell>& cells, const ArticleRecord& a) {
  auto& cell = cells[{a.field_id, a.year}];
  cell.mean_log_citations += std::log1p(static_cast<double>(a.citations));
  ++cell.count;
}

void finalize_cells(std::map<std::pair<std::string, int>, FieldYearCell>& cells) {
  for (auto& [key, cell] : cells) cell.mean_log_citations /= static_cast<double>(cell.count);
}

}  // namespace

void FieldYearStats::fill_missing(std::span<const ArticleRecord> corpus) {
  std::map<std::pair<std::string, int>, FieldYearCell> extra;
  for (const auto& a : corpus)
    if (!cells.contains({a.field_id, a.year})) accumulate_cells(extra, a);
  finalize_cells(extra);
  cells.merge(extra);
}

FieldYearStats field_year_stats(std::span<const ArticleRecord> corpus) {
  FieldYearStats stats;
  for (const auto& a : corpus) accumulate_cells(stats.cells, a);
  finalize_cells(stats.cells);
  return stats;
}

FieldYearStats field_year_stats(std::span<const ArticleRecord> corpus, std::span<const std::size_t> rows) {
  FieldYearStats stats;
  for (std::size_t r : rows) accumulate_cells(stats.cells, corpus[r]);
  finalize_cells(stats.cells);
  return stats;
}

double nlcs(std::int64_t citations, const std::string& field_id, int year, const FieldYearStats& stats) {
  const auto* cell = stats.find(field_id, year);
  if (!cell) throw LookupError(fmt::format("no citation statistics for field '{}' in {}", field_id, year));
  if (cell->mean_log_citations == 0.0) return 1.0;
  return std::log1p(static_cast<double>(citations)) / cell->mean_log_citations;
}

double JournalStats::lookup(const ArticleRecord& article) const {
  if (article.journal_mnlcs) return *article.journal_mnlcs;
  auto it = mnlcs.find(article.journal);
  return it == mnlcs.end() ? fallback : it->second;
}

JournalStats journal_stats(std::span<const ArticleRecord> corpus, std::span<const std::size_t> rows,
                           const FieldYearStats& stats) {
  std::map<std::string, std::pair<double, std::size_t>> sums;
  double total = 0.0;
  for (std::size_t r : rows) {
    const auto& a = corpus[r];
    const double v = nlcs(a.citations, a.field_id, a.year, stats);
    auto& s = sums[a.journal];
    s.first += v;
    ++s.second;
    total += v;
  }
  JournalStats out;
  for (const auto& [journal, s] : sums) out.mnlcs[journal] = s.first / static_cast<double>(s.second);
  if (!rows.empty()) out.fallback = total / static_cast<double>(rows.size());
  return out;
}

// ---------------------------------------------------------------------------
// Imputation

double median(std::vector<double> values) {
  if (values.empty()) throw PreconditionError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

namespace {

std::optional<double> measured_readability(const ArticleRecord& a) { return flesch_kincaid(clean_text(a.abstract)); }

}  // namespace

double Imputations::pages_for(const ArticleRecord& article) const {
  if (article.pages) return static_cast<double>(*article.pages);
  auto it = pages_by_uoa.find(article.uoa);
  return it == pages_by_uoa.end() ? pages_global : it->second;
}

double Imputations::readability_for(int uoa, std::optional<double> measured) const {
  if (measured) return *measured;
  auto it = readability_by_uoa.find(uoa);
  return it == readability_by_uoa.end() ? readability_global : it->second;
}

double Imputations::readability_for(const ArticleRecord& article) const {
  return readability_for(article.uoa, measured_readability(article));
}

Imputations compute_imputations(std::span<const ArticleRecord> corpus) {
  std::map<int, std::vector<double>> pages, readability;
  std::vector<double> all_pages, all_readability;
  for (const auto& a : corpus) {
    if (a.pages) {
      pages[a.uoa].push_back(*a.pages);
      all_pages.push_back(*a.pages);
    }
    if (auto fk = measured_readability(a)) {
      readability[a.uoa].push_back(*fk);
      all_readability.push_back(*fk);
    }
  }
  Imputations imp;
  for (auto& [uoa, v] : pages) imp.pages_by_uoa[uoa] = median(std::move(v));
  for (auto& [uoa, v] : readability) imp.readability_by_uoa[uoa] = median(std::move(v));
  imp.pages_unavailable = all_pages.empty();
  imp.readability_unavailable = all_readability.empty();
  imp.pages_global = imp.pages_unavailable ? 0.0 : median(std::move(all_pages));
  imp.readability_global = imp.readability_unavailable ? 0.0 : median(std::move(all_readability));
  return imp;
}

std::vector<double> impute_pages(std::span<const ArticleRecord> corpus) {
  const auto imp = compute_imputations(corpus);
  std::vector<double> out;
  out.reserve(corpus.size());
  for (const auto& a : corpus) out.push_back(imp.pages_for(a));
  return out;
}

// ---------------------------------------------------------------------------
// Term statistics

double chi_square_counts(std::span<const std::size_t> present, std::span<const std::size_t> class_totals) {
  double n = 0.0, p = 0.0;
  for (std::size_t c = 0; c < class_totals.size(); ++c) {
    n += static_cast<double>(class_totals[c]);
    p += static_cast<double>(present[c]);
  }
  const double a = n - p;
  if (p == 0.0 || a == 0.0) return 0.0;
  double chi2 = 0.0;
  for (std::size_t c = 0; c < class_totals.size(); ++c) {
    if (class_totals[c] == 0) continue;
    const double share = static_cast<double>(class_totals[c]) / n;
    const double e_present = p * share;
    const double e_absent = a * share;
    const double o_present = static_cast<double>(present[c]);
    const double o_absent = static_cast<double>(class_totals[c]) - o_present;
    chi2 += (o_present - e_present) * (o_present - e_present) / e_present;
    chi2 += (o_absent - e_absent) * (o_absent - e_absent) / e_absent;
  }
  return chi2;
}

int association_direction(std::span<const std::size_t> present, std::span<const std::size_t> class_totals) {
  // observed/expected = (present_c / n_c) / (P / N); the common factor drops.
  int best = 0;
  double best_rate = -1.0;
  for (std::size_t c = 0; c < class_totals.size(); ++c) {
    if (class_totals[c] == 0) continue;
    const double rate = static_cast<double>(present[c]) / static_cast<double>(class_totals[c]);
    if (rate > best_rate) {
      best_rate = rate;
      best = static_cast<int>(c);
    }
  }
  return best;
}

namespace {

std::vector<std::size_t> class_sizes(std::span<const int> labels, std::size_t n_classes) {
  std::vector<std::size_t> totals(n_classes, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw ValueError(fmt::format("label {} out of range", y));
    ++totals[static_cast<std::size_t>(y)];
  }
  return totals;
}

void require_two_classes(std::span<const std::size_t> totals) {
  const auto present = std::count_if(totals.begin(), totals.end(), [](std::size_t n) { return n > 0; });
  if (present < 2) throw PreconditionError("chi-square needs at least two classes among the labels");
}

struct TermScore {
  std::uint32_t id;
  double chi2;
  int direction;
};

std::vector<TermScore> score_terms(const TermIndex& index, std::span<const std::size_t> rows,
                                   std::span<const int> labels, std::size_t n_classes,
                                   std::vector<std::size_t>& totals) {
  std::vector<int> row_labels;
  row_labels.reserve(rows.size());
  for (std::size_t r : rows) row_labels.push_back(labels[r]);
  totals = class_sizes(row_labels, n_classes);
  require_two_classes(totals);

  std::vector<std::uint32_t> counts(index.n_terms() * n_classes, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto cls = static_cast<std::size_t>(row_labels[i]);
    for (std::uint32_t t : index.article_terms(rows[i])) ++counts[t * n_classes + cls];
  }

  std::vector<TermScore> scores;
  std::vector<std::size_t> present(n_classes);
  for (std::uint32_t t = 0; t < index.n_terms(); ++t) {
    std::size_t any = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      present[c] = counts[t * n_classes + c];
      any += present[c];
    }
    if (any == 0) continue;
    scores.push_back({t, chi_square_counts(present, totals), association_direction(present, totals)});
  }
  return scores;
}

}  // namespace

double chi_square(std::span<const std::uint8_t> presence, std::span<const int> labels, std::size_t n_classes) {
  if (presence.size() != labels.size()) throw PreconditionError("presence and labels differ in length");
  const auto totals = class_sizes(labels, n_classes);
  require_two_classes(totals);
  std::vector<std::size_t> present(n_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (presence[i]) ++present[static_cast<std::size_t>(labels[i])];
  return chi_square_counts(present, totals);
}

std::vector<Term> article_terms(const ArticleRecord& article, bool include_journal) {
  auto terms = tokenize(clean_text(article.title), clean_text(article.abstract), article.keywords);
  if (include_journal && !article.journal.empty()) {
    Term j{TermKind::journal_name, article.journal};
    terms.insert(std::upper_bound(terms.begin(), terms.end(), j), std::move(j));
  }
  return terms;
}

TermIndex::TermIndex(std::span<const ArticleRecord> corpus, bool include_journals) {
  article_terms_.reserve(corpus.size());
  for (const auto& a : corpus) {
    std::vector<std::uint32_t> ids;
    for (auto& term : refscore::article_terms(a, include_journals)) {
      auto [it, inserted] = lookup_.try_emplace(term, static_cast<std::uint32_t>(terms_.size()));
      if (inserted) terms_.push_back(std::move(term));
      ids.push_back(it->second);
    }
    std::sort(ids.begin(), ids.end());
    article_terms_.push_back(std::move(ids));
  }
}

std::optional<std::uint32_t> TermIndex::find(const Term& term) const {
  auto it = lookup_.find(term);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

Vocabulary select_features(const TermIndex& index, std::span<const std::size_t> rows, std::span<const int> labels,
                           std::size_t n_classes, std::size_t k_total, std::size_t n_biblio) {
  if (k_total <= n_biblio)
    throw PreconditionError(fmt::format("k_total {} must exceed the {} bibliometric columns", k_total, n_biblio));
  std::vector<std::size_t> totals;
  auto scores = score_terms(index, rows, labels, n_classes, totals);

  Vocabulary vocab;
  vocab.requested = k_total - n_biblio;
  const std::size_t take = std::min(vocab.requested, scores.size());
  vocab.shortfall = take < vocab.requested;
  auto better = [&](const TermScore& a, const TermScore& b) {
    if (a.chi2 != b.chi2) return a.chi2 > b.chi2;
    return index.term(a.id) < index.term(b.id);
  };
  std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(take), scores.end(), better);
  vocab.entries.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    vocab.entries.push_back({index.term(scores[i].id), scores[i].chi2, scores[i].direction});
  return vocab;
}

std::vector<TermAssociation> term_association_report(const TermIndex& index, std::span<const std::size_t> rows,
                                                     std::span<const int> labels, std::size_t n_classes,
                                                     std::size_t top_n) {
  std::vector<std::size_t> totals;
  auto scores = score_terms(index, rows, labels, n_classes, totals);
  std::vector<std::vector<TermScore>> by_class(n_classes);
  for (const auto& s : scores)
    if (s.chi2 > 1e-12) by_class[static_cast<std::size_t>(s.direction)].push_back(s);

  std::vector<TermAssociation> report;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& list = by_class[c];
    const std::size_t take = std::min(top_n, list.size());
    std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(take), list.end(),
                      [&](const TermScore& a, const TermScore& b) {
                        if (a.chi2 != b.chi2) return a.chi2 > b.chi2;
                        return index.term(a.id) < index.term(b.id);
                      });
    for (std::size_t i = 0; i < take; ++i)
      report.push_back({static_cast<int>(c), index.term(list[i].id), list[i].chi2, list[i].direction});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Feature matrix

namespace {

const std::vector<std::string> kBiblioColumns = {
    "nlcs",           "log_authors",        "log_institutions", "log_countries", "log_first_author_pubs",
    "first_author_mnlcs", "max_author_mnlcs", "pages",          "readability",   "journal_mnlcs",
};

}  // namespace

InputSet input_set_from_int(int value) {
  if (value < 1 || value > 3) throw ConfigError(fmt::format("input set {} does not exist (expected 1, 2 or 3)", value));
  return static_cast<InputSet>(value);
}

std::size_t dense_column_count(InputSet set) { return set == InputSet::bibliometric ? 9 : 10; }

std::span<const std::string> bibliometric_column_names() { return kBiblioColumns; }

double FeatureMatrix::value(std::size_t row, std::size_t col) const {
  if (col < n_dense) return dense[row * n_dense + col];
  const auto& present = text[row];
  return std::binary_search(present.begin(), present.end(), static_cast<std::uint32_t>(col - n_dense)) ? 1.0 : 0.0;
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.input_set = input_set;
  out.column_names = column_names;
  out.n_dense = n_dense;
  out.row_ids.reserve(rows.size());
  out.dense.reserve(rows.size() * n_dense);
  out.text.reserve(rows.size());
  for (std::size_t r : rows) {
    out.row_ids.push_back(row_ids[r]);
    out.dense.insert(out.dense.end(), dense.begin() + static_cast<std::ptrdiff_t>(r * n_dense),
                     dense.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_dense));
    out.text.push_back(text[r]);
  }
  return out;
}

FeatureMatrix build_matrix(std::span<const ArticleRecord> corpus, InputSet input_set, const FieldYearStats& stats,
                           const JournalStats* journals, const Vocabulary* vocabulary, const Imputations& imputations,
                           const TermIndex* index) {
  const bool with_journal = input_set != InputSet::bibliometric;
  const bool with_text = input_set == InputSet::text;
  if (with_journal && !journals) throw PreconditionError("input sets 2 and 3 need journal statistics");
  if (with_text && !vocabulary) throw PreconditionError("input set 3 needs a vocabulary");
  if (index && index->n_articles() != corpus.size()) throw PreconditionError("term index is not aligned with the corpus");

  FeatureMatrix m;
  m.input_set = input_set;
  m.n_dense = dense_column_count(input_set);
  m.column_names.assign(kBiblioColumns.begin(), kBiblioColumns.begin() + static_cast<std::ptrdiff_t>(m.n_dense));

  std::unordered_map<Term, std::uint32_t, TermHash> column_of_term;
  std::vector<std::int32_t> column_of_id;
  if (with_text) {
    if (index) column_of_id.assign(index->n_terms(), -1);
    for (std::size_t k = 0; k < vocabulary->entries.size(); ++k) {
      const auto& term = vocabulary->entries[k].term;
      m.column_names.push_back(fmt::format("{}:{}", to_string(term.kind), term.text));
      if (index) {
        if (auto id = index->find(term)) column_of_id[*id] = static_cast<std::int32_t>(k);
      } else {
        column_of_term.emplace(term, static_cast<std::uint32_t>(k));
      }
    }
  }

  m.row_ids.reserve(corpus.size());
  m.dense.reserve(corpus.size() * m.n_dense);
  m.text.resize(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& a = corpus[i];
    m.row_ids.push_back(a.id);
    double citation_score = 0.0;
    try {
      citation_score = nlcs(a.citations, a.field_id, a.year, stats);
    } catch (const LookupError& e) {
      throw LookupError(fmt::format("article '{}': {}", a.id, e.what()));
    }
    m.dense.push_back(citation_score);
    m.dense.push_back(std::log1p(static_cast<double>(a.n_authors)));
    m.dense.push_back(std::log1p(static_cast<double>(a.n_institutions)));
    m.dense.push_back(std::log1p(static_cast<double>(a.n_countries)));
    m.dense.push_back(std::log1p(static_cast<double>(a.first_author_pubs)));
    m.dense.push_back(a.first_author_mnlcs);
    m.dense.push_back(a.max_author_mnlcs);
    m.dense.push_back(imputations.pages_for(a));
    m.dense.push_back(imputations.readability_for(a));
    if (with_journal) m.dense.push_back(journals->lookup(a));

    if (!with_text) continue;
    auto& row = m.text[i];
    if (index) {
      for (std::uint32_t id : index->article_terms(i))
        if (column_of_id[id] >= 0) row.push_back(static_cast<std::uint32_t>(column_of_id[id]));
    } else {
      for (const auto& term : article_terms(a))
        if (auto it = column_of_term.find(term); it != column_of_term.end()) row.push_back(it->second);
    }
    std::sort(row.begin(), row.end());
  }
  return m;
}

void write_matrix_csv(std::ostream& out, const FeatureMatrix& matrix) {
  out << "id";
  for (std::size_t c = 0; c < matrix.cols(); ++c) out << ",f" << (c + 1);
  out << '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    out << matrix.row_ids[r];
    for (std::size_t c = 0; c < matrix.n_dense; ++c) out << ',' << fmt::format("{}", matrix.dense[r * matrix.n_dense + c]);
    std::size_t next = 0;
    const auto& present = matrix.text[r];
    for (std::size_t c = 0; c < matrix.n_text(); ++c) {
      const bool on = next < present.size() && present[next] == c;
      if (on) ++next;
      out << (on ? ",1" : ",0");
    }
    out << '\n';
  }
}

void write_vocabulary_csv(std::ostream& out, const Vocabulary& vocabulary, const LabelScheme& scheme) {
  out << "rank,kind,token,chi2,direction\n";
  for (std::size_t i = 0; i < vocabulary.entries.size(); ++i) {
    const auto& e = vocabulary.entries[i];
    std::string token = e.term.text;
    if (token.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : token) {
        if (c == '"') quoted.push_back('"');
        quoted.push_back(c);
      }
      token = quoted + "\"";
    }
    out << (i + 1) << ',' << to_string(e.term.kind) << ',' << token << ',' << fmt::format("{}", e.chi2) << ','
        << scheme.class_name(e.direction) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Featurizer

Featurizer::Featurizer(std::span<const ArticleRecord> corpus, FeatureConfig config)
    : config_(config), imputations_(compute_imputations(corpus)) {
  if (config_.input_set == InputSet::text) terms_ = TermIndex(corpus);
}

Featurizer::Fitted Featurizer::fit(std::span<const ArticleRecord> corpus, std::span<const std::size_t> train_rows,
                                   std::span<const int> labels, std::size_t n_classes) const {
  Fitted fitted;
  fitted.stats = field_year_stats(corpus, train_rows);
  fitted.stats.fill_missing(corpus);
  if (config_.input_set != InputSet::bibliometric) fitted.journals = journal_stats(corpus, train_rows, fitted.stats);
  if (config_.input_set == InputSet::text)
    fitted.vocabulary = select_features(terms_, train_rows, labels, n_classes, config_.k_total,
                                        dense_column_count(config_.input_set));
  return fitted;
}

FeatureMatrix Featurizer::build(std::span<const ArticleRecord> corpus, const Fitted& fitted) const {
  const bool text = config_.input_set == InputSet::text;
  return build_matrix(corpus, config_.input_set, fitted.stats, &fitted.journals, text ? &fitted.vocabulary : nullptr,
                      imputations_, text ? &terms_ : nullptr);
}

}  // namespace refscore
