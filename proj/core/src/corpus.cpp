#include "refscore/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "refscore/errors.hpp"
#include "refscore/rng.hpp"
#include "refscore/text.hpp"

namespace refscore {

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::female: return "F";
    case Gender::male: return "M";
    case Gender::unknown: return "unknown";
  }
  return "unknown";
}

CorpusFormat corpus_format_from_string(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw ConfigError("unknown corpus format '" + std::string(name) + "' (expected jsonl or csv)");
}

namespace {

constexpr std::string_view kColumns[] = {
    "id",          "doi_group",         "uoa",        "year",           "score",          "title",
    "abstract",    "keywords",          "journal",    "field_id",       "citations",      "n_authors",
    "n_institutions", "n_countries",    "first_author_pubs", "first_author_mnlcs", "max_author_mnlcs",
    "pages",       "institution",       "ecr",        "gender_label",   "interdisciplinary", "journal_mnlcs",
};

// Uniform access to one input row regardless of file format.
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual std::optional<std::string> scalar(std::string_view name) const = 0;
  virtual std::vector<std::string> list(std::string_view name) const = 0;
};

class JsonFields final : public FieldSource {
 public:
  JsonFields(const nlohmann::json& object, std::size_t row) : object_(object), row_(row) {}

  std::optional<std::string> scalar(std::string_view name) const override {
    auto it = object_.find(std::string(name));
    if (it == object_.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_boolean()) return it->get<bool>() ? "true" : "false";
    if (it->is_number()) return it->dump();
    throw ValueError(fmt::format("row {}: field '{}' must be a scalar", row_, name));
  }

  std::vector<std::string> list(std::string_view name) const override {
    auto it = object_.find(std::string(name));
    if (it == object_.end() || it->is_null()) return {};
    if (!it->is_array()) throw ValueError(fmt::format("row {}: field '{}' must be an array of strings", row_, name));
    std::vector<std::string> out;
    for (const auto& item : *it) {
      if (!item.is_string()) throw ValueError(fmt::format("row {}: field '{}' must be an array of strings", row_, name));
      out.push_back(item.get<std::string>());
    }
    return out;
  }

 private:
  const nlohmann::json& object_;
  std::size_t row_;
};

class CsvFields final : public FieldSource {
 public:
  CsvFields(const std::unordered_map<std::string, std::size_t>& header, const std::vector<std::string>& cells)
      : header_(header), cells_(cells) {}

  std::optional<std::string> scalar(std::string_view name) const override {
    auto it = header_.find(std::string(name));
    if (it == header_.end() || it->second >= cells_.size() || cells_[it->second].empty()) return std::nullopt;
    return cells_[it->second];
  }

  // Keyword lists are ';'-separated inside one cell.
  std::vector<std::string> list(std::string_view name) const override {
    auto cell = scalar(name);
    std::vector<std::string> out;
    if (!cell) return out;
    std::size_t start = 0;
    while (start <= cell->size()) {
      auto end = cell->find(';', start);
      if (end == std::string::npos) end = cell->size();
      std::string item = clean_text(std::string_view(*cell).substr(start, end - start));
      if (!item.empty()) out.push_back(std::move(item));
      start = end + 1;
    }
    return out;
  }

 private:
  const std::unordered_map<std::string, std::size_t>& header_;
  const std::vector<std::string>& cells_;
};

template <class T>
T parse_number(const std::string& text, std::string_view field, std::size_t row) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ValueError(fmt::format("row {}: field '{}' has malformed value '{}'", row, field, text));
  return value;
}

std::int64_t parse_integer(const std::string& text, std::string_view field, std::size_t row) {
  // JSON may carry integral values as 3.0; accept those too.
  std::int64_t value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc() && ptr == text.data() + text.size()) return value;
  const double d = parse_number<double>(text, field, row);
  if (d != static_cast<double>(static_cast<std::int64_t>(d)))
    throw ValueError(fmt::format("row {}: field '{}' must be an integer, got '{}'", row, field, text));
  return static_cast<std::int64_t>(d);
}

bool parse_bool(const std::string& text, std::string_view field, std::size_t row) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValueError(fmt::format("row {}: field '{}' must be true or false, got '{}'", row, field, text));
}

std::string need(const FieldSource& src, std::string_view field, std::size_t row) {
  auto v = src.scalar(field);
  if (!v) throw SchemaError(fmt::format("row {}: required field '{}' is missing", row, field));
  return *v;
}

// Text fields may legitimately be empty strings; only absence is an error.
std::string need_text(const FieldSource& src, std::string_view field, std::size_t row, bool csv) {
  auto v = src.scalar(field);
  if (!v) {
    if (csv) return {};
    throw SchemaError(fmt::format("row {}: required field '{}' is missing", row, field));
  }
  return *v;
}

std::int64_t need_int(const FieldSource& src, std::string_view field, std::size_t row, std::int64_t lo,
                      std::int64_t hi) {
  const auto v = parse_integer(need(src, field, row), field, row);
  if (v < lo || v > hi) throw ValueError(fmt::format("row {}: field '{}' value {} outside [{}, {}]", row, field, v, lo, hi));
  return v;
}

double need_nonneg(const FieldSource& src, std::string_view field, std::size_t row) {
  const auto v = parse_number<double>(need(src, field, row), field, row);
  if (!(v >= 0.0)) throw ValueError(fmt::format("row {}: field '{}' must be non-negative", row, field));
  return v;
}

ArticleRecord build_record(const FieldSource& src, std::size_t row, bool csv) {
  constexpr std::int64_t kMax = std::numeric_limits<std::int32_t>::max();
  ArticleRecord r;
  r.id = need(src, "id", row);
  r.doi_group = need(src, "doi_group", row);
  r.uoa = static_cast<int>(need_int(src, "uoa", row, 1, 34));
  r.year = static_cast<int>(need_int(src, "year", row, 0, 9999));
  if (auto s = src.scalar("score")) {
    const auto v = parse_integer(*s, "score", row);
    if (v < 0 || v > 4) throw ValueError(fmt::format("row {}: score {} outside 0..4", row, v));
    r.score = static_cast<int>(v);
  }
  r.title = need_text(src, "title", row, csv);
  r.abstract = need_text(src, "abstract", row, csv);
  r.keywords = src.list("keywords");
  r.journal = need_text(src, "journal", row, csv);
  r.field_id = need_text(src, "field_id", row, csv);
  r.citations = need_int(src, "citations", row, 0, std::numeric_limits<std::int64_t>::max());
  r.n_authors = static_cast<int>(need_int(src, "n_authors", row, 1, kMax));
  r.n_institutions = static_cast<int>(need_int(src, "n_institutions", row, 1, kMax));
  r.n_countries = static_cast<int>(need_int(src, "n_countries", row, 1, kMax));
  r.first_author_pubs = need_int(src, "first_author_pubs", row, 0, std::numeric_limits<std::int64_t>::max());
  r.first_author_mnlcs = need_nonneg(src, "first_author_mnlcs", row);
  r.max_author_mnlcs = need_nonneg(src, "max_author_mnlcs", row);
  if (auto p = src.scalar("pages")) {
    const auto v = parse_integer(*p, "pages", row);
    if (v < 1 || v > kMax) throw ValueError(fmt::format("row {}: pages must be positive", row));
    r.pages = static_cast<int>(v);
  }
  r.institution = need(src, "institution", row);
  if (auto v = src.scalar("ecr")) r.ecr = parse_bool(*v, "ecr", row);
  if (auto v = src.scalar("gender_label")) {
    if (*v == "F") r.gender_label = Gender::female;
    else if (*v == "M") r.gender_label = Gender::male;
    else if (*v == "unknown") r.gender_label = Gender::unknown;
    else throw ValueError(fmt::format("row {}: gender_label must be F, M or unknown, got '{}'", row, *v));
  }
  if (auto v = src.scalar("interdisciplinary")) r.interdisciplinary = parse_bool(*v, "interdisciplinary", row);
  if (auto v = src.scalar("journal_mnlcs")) {
    r.journal_mnlcs = parse_number<double>(*v, "journal_mnlcs", row);
    if (!(*r.journal_mnlcs >= 0.0)) throw ValueError(fmt::format("row {}: journal_mnlcs must be non-negative", row));
  }
  return r;
}

// RFC 4180 records; quoted cells may contain separators and newlines.
bool read_csv_record(std::istream& in, std::vector<std::string>& cells) {
  cells.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string cell;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          cell.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  if (quoted) throw SchemaError("unterminated quoted CSV cell");
  if (!any) return false;
  cells.push_back(std::move(cell));
  return true;
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

nlohmann::ordered_json record_to_json(const ArticleRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["doi_group"] = r.doi_group;
  j["uoa"] = r.uoa;
  j["year"] = r.year;
  if (r.score) j["score"] = *r.score;
  j["title"] = r.title;
  j["abstract"] = r.abstract;
  j["keywords"] = r.keywords;
  j["journal"] = r.journal;
  j["field_id"] = r.field_id;
  j["citations"] = r.citations;
  j["n_authors"] = r.n_authors;
  j["n_institutions"] = r.n_institutions;
  j["n_countries"] = r.n_countries;
  j["first_author_pubs"] = r.first_author_pubs;
  j["first_author_mnlcs"] = r.first_author_mnlcs;
  j["max_author_mnlcs"] = r.max_author_mnlcs;
  if (r.pages) j["pages"] = *r.pages;
  j["institution"] = r.institution;
  if (r.ecr) j["ecr"] = *r.ecr;
  if (r.gender_label) j["gender_label"] = std::string(to_string(*r.gender_label));
  if (r.interdisciplinary) j["interdisciplinary"] = *r.interdisciplinary;
  if (r.journal_mnlcs) j["journal_mnlcs"] = *r.journal_mnlcs;
  return j;
}

}  // namespace

Corpus parse_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (clean_text(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(fmt::format("row {}: invalid JSON ({})", row, e.what()));
    }
    if (!j.is_object()) throw SchemaError(fmt::format("row {}: expected a JSON object", row));
    corpus.push_back(build_record(JsonFields(j, row), row, false));
  }
  return corpus;
}

Corpus parse_csv(std::istream& in) {
  std::vector<std::string> cells;
  if (!read_csv_record(in, cells)) throw SchemaError("CSV corpus has no header row");
  std::unordered_map<std::string, std::size_t> header;
  for (std::size_t i = 0; i < cells.size(); ++i) header.emplace(clean_text(cells[i]), i);
  for (std::string_view required :
       {"id", "doi_group", "uoa", "year", "title", "abstract", "journal", "field_id", "citations", "n_authors",
        "n_institutions", "n_countries", "first_author_pubs", "first_author_mnlcs", "max_author_mnlcs",
        "institution"}) {
    if (!header.contains(std::string(required)))
      throw SchemaError(fmt::format("row 0: header lacks required column '{}'", required));
  }
  Corpus corpus;
  std::size_t row = 0;
  while (read_csv_record(in, cells)) {
    ++row;
    if (cells.size() == 1 && cells[0].empty()) continue;
    corpus.push_back(build_record(CsvFields(header, cells), row, true));
  }
  return corpus;
}

Corpus ingest_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return format == CorpusFormat::jsonl ? parse_jsonl(in) : parse_csv(in);
}

void write_jsonl(std::ostream& out, std::span<const ArticleRecord> corpus) {
  for (const auto& r : corpus) out << record_to_json(r).dump() << '\n';
}

void write_csv(std::ostream& out, std::span<const ArticleRecord> corpus) {
  for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (const auto& r : corpus) {
    std::string keywords;
    for (std::size_t i = 0; i < r.keywords.size(); ++i) keywords += (i ? ";" : "") + r.keywords[i];
    const std::string fields[] = {
        r.id,
        r.doi_group,
        std::to_string(r.uoa),
        std::to_string(r.year),
        r.score ? std::to_string(*r.score) : "",
        r.title,
        r.abstract,
        keywords,
        r.journal,
        r.field_id,
        std::to_string(r.citations),
        std::to_string(r.n_authors),
        std::to_string(r.n_institutions),
        std::to_string(r.n_countries),
        std::to_string(r.first_author_pubs),
        fmt::format("{}", r.first_author_mnlcs),
        fmt::format("{}", r.max_author_mnlcs),
        r.pages ? std::to_string(*r.pages) : "",
        r.institution,
        r.ecr ? (*r.ecr ? "true" : "false") : "",
        r.gender_label ? std::string(to_string(*r.gender_label)) : "",
        r.interdisciplinary ? (*r.interdisciplinary ? "true" : "false") : "",
        r.journal_mnlcs ? fmt::format("{}", *r.journal_mnlcs) : "",
    };
    for (std::size_t i = 0; i < std::size(fields); ++i) out << (i ? "," : "") << csv_escape(fields[i]);
    out << '\n';
  }
}

void validate(const InclusionPolicy& policy) {
  if (policy.year_min > policy.year_max) throw ConfigError("inclusion.year_min must not exceed inclusion.year_max");
}

InclusionResult apply_inclusion(std::span<const ArticleRecord> corpus, const InclusionPolicy& policy) {
  validate(policy);
  InclusionResult result;
  for (const char* reason : {"year", "abstract", "score", "citation"}) result.dropped[reason] = 0;
  for (const auto& record : corpus) {
    ArticleRecord r = record;
    r.title = clean_text(record.title);
    r.abstract = clean_text(record.abstract);
    if (r.year < policy.year_min || r.year > policy.year_max) {
      ++result.dropped["year"];
    } else if (utf8_length(r.abstract) < policy.min_abstract_chars) {
      ++result.dropped["abstract"];
    } else if (policy.drop_score_zero && r.score && *r.score == 0) {
      ++result.dropped["score"];
    } else if (policy.require_citation_record && r.field_id.empty()) {
      ++result.dropped["citation"];
    } else {
      result.kept.push_back(std::move(r));
    }
  }
  return result;
}

Corpus dedup_within_uoa(std::span<const ArticleRecord> corpus, std::uint64_t seed) {
  std::map<std::pair<int, std::string>, std::size_t> slot_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto [it, inserted] = slot_of.try_emplace({corpus[i].uoa, corpus[i].doi_group}, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  Rng rng(seed);
  Corpus out;
  out.reserve(groups.size());
  for (const auto& members : groups) {
    ArticleRecord kept = corpus[members.front()];
    std::vector<int> scores;
    for (std::size_t i : members)
      if (corpus[i].score) scores.push_back(*corpus[i].score);
    if (members.size() > 1 && !scores.empty()) {
      std::sort(scores.begin(), scores.end());
      const std::size_t m = scores.size();
      if (m % 2 == 1) {
        kept.score = scores[m / 2];
      } else {
        const int lo = scores[m / 2 - 1];
        const int hi = scores[m / 2];
        kept.score = lo == hi ? lo : (rng.index(2) == 0 ? lo : hi);
      }
    }
    out.push_back(std::move(kept));
  }
  return out;
}

AgreementReport agreement_stats(std::span<const ArticleRecord> corpus, AgreementScope scope) {
  std::map<std::string, std::vector<const ArticleRecord*>> by_doi;
  for (const auto& r : corpus)
    if (r.score && *r.score >= 1) by_doi[r.doi_group].push_back(&r);

  AgreementReport report;
  report.scope = scope;
  std::map<int, GroupSizeAgreement> uoa_counts;
  for (const auto& [doi, members] : by_doi) {
    const std::size_t size = members.size();
    bool contributed = false;
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = i + 1; j < size; ++j) {
        const auto& a = *members[i];
        const auto& b = *members[j];
        const bool same_uoa = a.uoa == b.uoa;
        if (same_uoa != (scope == AgreementScope::within_uoa)) continue;
        contributed = true;
        const bool equal = *a.score == *b.score;
        const bool equal_merged = equal || (*a.score <= 2 && *b.score <= 2);
        ++report.n_pairs;
        report.n_agreeing += equal ? 1 : 0;
        report.n_agreeing_merged += equal_merged ? 1 : 0;
        auto& by_size = report.by_group_size[size];
        ++by_size.pairs;
        by_size.agreeing += equal ? 1 : 0;
        if (same_uoa) {
          ++uoa_counts[a.uoa].pairs;
          uoa_counts[a.uoa].agreeing += equal ? 1 : 0;
        }
      }
    }
    if (contributed) ++report.n_groups;
  }

  if (report.n_pairs == 0) return report;
  const auto pairs = static_cast<double>(report.n_pairs);
  report.agreement = static_cast<double>(report.n_agreeing) / pairs;
  report.agreement_merged = static_cast<double>(report.n_agreeing_merged) / pairs;
  for (const auto& [uoa, counts] : uoa_counts) report.per_uoa[uoa] = counts.rate();

  if (scope == AgreementScope::between_uoa && report.by_group_size.size() >= 2) {
    // Ordinary least squares of per-size agreement on group size,
    // evaluated at a group of one.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(report.by_group_size.size());
    for (const auto& [size, counts] : report.by_group_size) {
      const auto x = static_cast<double>(size);
      const double y = counts.rate();
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    report.extrapolated_single = std::clamp(intercept + slope, 0.0, 1.0);
  }
  return report;
}

HomogeneityReport journal_homogeneity(std::span<const ArticleRecord> corpus) {
  // key -> score -> count
  using Counts = std::map<std::string, std::map<int, std::size_t>>;
  Counts overall;
  std::map<int, Counts> per_uoa;
  for (const auto& r : corpus) {
    if (!r.score) continue;
    ++overall[r.journal][*r.score];
    ++per_uoa[r.uoa][r.journal][*r.score];
  }

  auto pooled = [](const Counts& counts, std::size_t* pairs_out) -> std::optional<double> {
    std::size_t pairs = 0, equal = 0;
    for (const auto& [journal, scores] : counts) {
      std::size_t n = 0;
      for (const auto& [score, k] : scores) {
        n += k;
        equal += k * (k - 1) / 2;
      }
      pairs += n * (n - 1) / 2;
    }
    if (pairs_out) *pairs_out = pairs;
    if (pairs == 0) return std::nullopt;
    return static_cast<double>(equal) / static_cast<double>(pairs);
  };

  HomogeneityReport report;
  report.overall = pooled(overall, &report.n_pairs);
  for (const auto& [uoa, counts] : per_uoa) report.per_uoa[uoa] = pooled(counts, nullptr);
  return report;
}

}  // namespace refscore
