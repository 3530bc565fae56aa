#include "refscore/text.hpp"

#include <algorithm>
#include <functional>

#include "refscore/errors.hpp"

namespace refscore {

namespace {

bool is_ascii_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c >= 0x80;
}

bool has_word_content(std::string_view w) {
  return std::any_of(w.begin(), w.end(), [](unsigned char c) { return c != '-'; });
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y'; }

// Splits at [.!?] followed by whitespace or end of text.
std::vector<std::string_view> split_sentences(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool boundary = i + 1 == text.size() || is_ascii_space(static_cast<unsigned char>(text[i + 1]));
    if (!boundary) continue;
    out.push_back(text.substr(start, i + 1 - start));
    start = i + 1;
  }
  if (start < text.size()) out.push_back(text.substr(start));
  return out;
}

void emit_ngrams(const std::vector<std::string>& words, std::vector<Term>& out) {
  for (std::size_t i = 0; i < words.size(); ++i) {
    out.push_back({TermKind::unigram, words[i]});
    if (i + 1 < words.size()) out.push_back({TermKind::bigram, words[i] + ' ' + words[i + 1]});
    if (i + 2 < words.size()) out.push_back({TermKind::trigram, words[i] + ' ' + words[i + 1] + ' ' + words[i + 2]});
  }
}

}  // namespace

std::string clean_text(std::string_view raw) {
  std::string stripped;
  stripped.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto c = static_cast<unsigned char>(raw[i]);
    if (c == '<') {
      const auto close = raw.find('>', i + 1);
      if (close != std::string_view::npos) {
        stripped.push_back(' ');
        i = close;
        continue;
      }
    }
    if (is_ascii_space(c)) {
      stripped.push_back(' ');
    } else if (c < 0x20 || c == 0x7f) {
      continue;
    } else {
      stripped.push_back(static_cast<char>(c));
    }
  }

  std::string out;
  out.reserve(stripped.size());
  bool pending_space = false;
  for (char c : stripped) {
    if (c == ' ') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(
      std::count_if(text.begin(), text.end(), [](unsigned char c) { return (c & 0xC0) != 0x80; }));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view run = text.substr(i, j - i);
    while (!run.empty() && run.front() == '-') run.remove_prefix(1);
    while (!run.empty() && run.back() == '-') run.remove_suffix(1);
    if (has_word_content(run)) {
      std::string w(run);
      for (char& ch : w)
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      words.push_back(std::move(w));
    }
    i = j;
  }
  return words;
}

int count_syllables(std::string_view word) {
  std::string w;
  for (char c : word) w.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  int groups = 0;
  bool in_group = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  const std::size_t n = w.size();
  const bool silent_e = n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2]);
  if (silent_e && groups > 1) --groups;
  return std::max(groups, 1);
}

ReadabilityCounts readability_counts(std::string_view text) {
  ReadabilityCounts counts;
  for (std::string_view sentence : split_sentences(text)) {
    const auto words = split_words(sentence);
    if (words.empty()) continue;
    ++counts.sentences;
    counts.words += words.size();
    for (const auto& w : words) counts.syllables += static_cast<std::size_t>(count_syllables(w));
  }
  return counts;
}

std::optional<double> flesch_kincaid(std::string_view text) {
  const auto c = readability_counts(text);
  if (c.words == 0) return std::nullopt;
  const double words = static_cast<double>(c.words);
  return 0.39 * (words / static_cast<double>(c.sentences)) + 11.8 * (static_cast<double>(c.syllables) / words) - 15.59;
}

std::string_view to_string(TermKind kind) {
  switch (kind) {
    case TermKind::unigram: return "unigram";
    case TermKind::bigram: return "bigram";
    case TermKind::trigram: return "trigram";
    case TermKind::journal_name: return "journal_name";
  }
  return "unigram";
}

TermKind term_kind_from_string(std::string_view name) {
  if (name == "unigram") return TermKind::unigram;
  if (name == "bigram") return TermKind::bigram;
  if (name == "trigram") return TermKind::trigram;
  if (name == "journal_name") return TermKind::journal_name;
  throw ValueError("unknown term kind '" + std::string(name) + "'");
}

std::size_t TermHash::operator()(const Term& t) const noexcept {
  return std::hash<std::string>{}(t.text) * 31u + static_cast<std::size_t>(t.kind);
}

std::vector<Term> tokenize(std::string_view title, std::string_view abstract,
                           const std::vector<std::string>& keywords) {
  std::vector<Term> terms;
  for (std::string_view sentence : split_sentences(title)) emit_ngrams(split_words(sentence), terms);
  for (std::string_view sentence : split_sentences(abstract)) emit_ngrams(split_words(sentence), terms);
  for (const auto& phrase : keywords) emit_ngrams(split_words(phrase), terms);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  return terms;
}

}  // namespace refscore
