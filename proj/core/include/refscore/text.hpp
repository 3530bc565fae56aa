#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refscore {

// Strips <...> markup, drops control characters, collapses whitespace runs
// and trims. Idempotent.
std::string clean_text(std::string_view raw);

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

// Vowel-group syllable heuristic: groups of [aeiouy], minus a silent
// trailing 'e' unless that would leave zero, minimum one.
int count_syllables(std::string_view word);

struct ReadabilityCounts {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
};

ReadabilityCounts readability_counts(std::string_view text);

// Flesch-Kincaid grade level. nullopt when the text has no words.
std::optional<double> flesch_kincaid(std::string_view text);

enum class TermKind { unigram, bigram, trigram, journal_name };

std::string_view to_string(TermKind kind);
TermKind term_kind_from_string(std::string_view name);

struct Term {
  TermKind kind = TermKind::unigram;
  std::string text;

  friend bool operator==(const Term&, const Term&) = default;
  // Orders by text first, then kind; this is the lexicographic tie rule
  // used by feature ranking.
  friend std::strong_ordering operator<=>(const Term& a, const Term& b) {
    if (auto c = a.text <=> b.text; c != 0) return c;
    return a.kind <=> b.kind;
  }
};

struct TermHash {
  std::size_t operator()(const Term& t) const noexcept;
};

// Lowercased word n-grams (n = 1..3) that never cross a sentence boundary.
// Title and abstract are split into sentences at [.!?] followed by
// whitespace; each keyword phrase is a sentence of its own. The result is
// a sorted, duplicate-free presence set.
std::vector<Term> tokenize(std::string_view title, std::string_view abstract,
                           const std::vector<std::string>& keywords);

// Lowercased words of one sentence-free span (helper exposed for tests).
std::vector<std::string> split_words(std::string_view text);

}  // namespace refscore
