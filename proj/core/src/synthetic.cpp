#include "refscore/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "refscore/errors.hpp"
#include "refscore/json_reader.hpp"
#include "refscore/rng.hpp"
#include "refscore/text.hpp"

namespace refscore {

namespace {

void check_rate(double value, const std::string& field) {
  if (!(value >= 0.0 && value <= 1.0)) throw ConfigError(field + ": must lie in [0, 1]");
}

std::vector<std::string> make_filler(std::size_t count, const std::set<std::string>& reserved, Rng& rng) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < count) {
    const std::size_t syllables = 2 + rng.index(3);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
      w.push_back(consonants[rng.index(consonants.size())]);
      w.push_back(vowels[rng.index(vowels.size())]);
    }
    if (reserved.contains(w) || !seen.insert(w).second) continue;
    words.push_back(std::move(w));
  }
  return words;
}

std::string capitalized(std::string word) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') word[0] = static_cast<char>(word[0] - 'a' + 'A');
  return word;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

int star_for_class(const LabelScheme& scheme, int cls, Rng& rng) {
  if (scheme.mode() == LabelMode::three_class && cls == 0) return rng.bernoulli(0.7) ? 2 : 1;
  return scheme.representative_score(cls);
}

}  // namespace

void SyntheticSpec::validate() const {
  const std::size_t classes = n_classes();
  if (uoas.empty()) throw ConfigError("uoas: at least one UoA is required");
  std::set<int> seen;
  for (std::size_t i = 0; i < uoas.size(); ++i) {
    const auto path = fmt::format("uoas[{}]", i);
    if (uoas[i].uoa < 1 || uoas[i].uoa > 34) throw ConfigError(path + ".uoa: must lie in 1..34");
    if (!seen.insert(uoas[i].uoa).second) throw ConfigError(path + ".uoa: duplicate UoA");
    if (uoas[i].class_prior.size() != classes)
      throw ConfigError(fmt::format("{}.class_prior: expected {} entries", path, classes));
    double total = 0.0;
    for (double p : uoas[i].class_prior) {
      check_rate(p, path + ".class_prior");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) throw ConfigError(path + ".class_prior: must sum to 1");
  }
  for (std::size_t i = 0; i < planted.size(); ++i) {
    const auto path = fmt::format("planted[{}]", i);
    if (planted[i].cls < 0 || static_cast<std::size_t>(planted[i].cls) >= classes)
      throw ConfigError(path + ".class: out of range");
    if (split_words(planted[i].token).empty()) throw ConfigError(path + ".token: must contain a word");
    check_rate(planted[i].probability, path + ".probability");
  }
  if (citations.size() != classes) throw ConfigError(fmt::format("citations: expected {} entries", classes));
  for (std::size_t i = 0; i < citations.size(); ++i)
    if (!(citations[i].sigma >= 0.0)) throw ConfigError(fmt::format("citations[{}].sigma: must be non-negative", i));
  if (filler_vocabulary < 10) throw ConfigError("filler_vocabulary: must be at least 10");
  if (n_journals < 1) throw ConfigError("n_journals: must be positive");
  if (n_fields < 1) throw ConfigError("n_fields: must be positive");
  if (n_institutions < 1) throw ConfigError("n_institutions: must be positive");
  if (!(institution_quality_spread >= 0.0)) throw ConfigError("institution_quality_spread: must be non-negative");
  if (year_min > year_max) throw ConfigError("year_min: must not exceed year_max");
  check_rate(journal_quality_bias, "journal_quality_bias");
  check_rate(noise, "noise");
  check_rate(duplicate_rate, "duplicate_rate");
  check_rate(cross_uoa_duplicate_share, "cross_uoa_duplicate_share");
  check_rate(duplicate_agreement, "duplicate_agreement");
  check_rate(ecr_rate, "ecr_rate");
  check_rate(female_rate, "female_rate");
  check_rate(gender_unknown_rate, "gender_unknown_rate");
  check_rate(interdisciplinary_rate, "interdisciplinary_rate");
  check_rate(missing_pages_rate, "missing_pages_rate");
  if (!(drift_rate >= 0.0)) throw ConfigError("drift_rate: must be non-negative");
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  JsonObjectReader in(j, "");
  SyntheticSpec spec;
  spec.label_mode = LabelScheme::parse(in.string_or("label_scheme", "three_class")).mode();

  const auto& uoas = in.required("uoas");
  if (!uoas.is_array()) throw ConfigError("uoas: expected an array");
  for (std::size_t i = 0; i < uoas.size(); ++i) {
    JsonObjectReader u(uoas[i], fmt::format("uoas[{}]", i));
    SyntheticUoa entry;
    entry.uoa = static_cast<int>(u.integer("uoa"));
    const auto n = u.integer("n_articles");
    if (n < 0) throw ConfigError(u.path_of("n_articles") + ": must be non-negative");
    entry.n_articles = static_cast<std::size_t>(n);
    entry.class_prior = u.numbers("class_prior");
    u.finish();
    spec.uoas.push_back(std::move(entry));
  }

  if (const auto* planted = in.optional("planted")) {
    if (!planted->is_array()) throw ConfigError("planted: expected an array");
    for (std::size_t i = 0; i < planted->size(); ++i) {
      JsonObjectReader p((*planted)[i], fmt::format("planted[{}]", i));
      PlantedToken t;
      t.cls = static_cast<int>(p.integer("class"));
      t.token = p.string("token");
      t.probability = p.number("probability");
      p.finish();
      spec.planted.push_back(std::move(t));
    }
  }

  const auto& cits = in.required("citations");
  if (!cits.is_array()) throw ConfigError("citations: expected an array");
  for (std::size_t i = 0; i < cits.size(); ++i) {
    JsonObjectReader c(cits[i], fmt::format("citations[{}]", i));
    spec.citations.push_back({c.number("mu"), c.number("sigma")});
    c.finish();
  }

  auto count = [&](const char* key, std::size_t fallback) {
    const auto v = in.integer_or(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError(std::string(key) + ": must be non-negative");
    return static_cast<std::size_t>(v);
  };
  spec.filler_vocabulary = count("filler_vocabulary", spec.filler_vocabulary);
  spec.n_journals = count("n_journals", spec.n_journals);
  spec.n_fields = count("n_fields", spec.n_fields);
  spec.n_institutions = count("n_institutions", spec.n_institutions);
  spec.journal_quality_bias = in.number_or("journal_quality_bias", spec.journal_quality_bias);
  spec.institution_quality_spread = in.number_or("institution_quality_spread", spec.institution_quality_spread);
  spec.year_min = static_cast<int>(in.integer_or("year_min", spec.year_min));
  spec.year_max = static_cast<int>(in.integer_or("year_max", spec.year_max));
  spec.noise = in.number_or("noise", spec.noise);
  spec.duplicate_rate = in.number_or("duplicate_rate", spec.duplicate_rate);
  spec.cross_uoa_duplicate_share = in.number_or("cross_uoa_duplicate_share", spec.cross_uoa_duplicate_share);
  spec.duplicate_agreement = in.number_or("duplicate_agreement", spec.duplicate_agreement);
  spec.ecr_rate = in.number_or("ecr_rate", spec.ecr_rate);
  spec.female_rate = in.number_or("female_rate", spec.female_rate);
  spec.gender_unknown_rate = in.number_or("gender_unknown_rate", spec.gender_unknown_rate);
  spec.interdisciplinary_rate = in.number_or("interdisciplinary_rate", spec.interdisciplinary_rate);
  spec.missing_pages_rate = in.number_or("missing_pages_rate", spec.missing_pages_rate);
  spec.drift_rate = in.number_or("drift_rate", spec.drift_rate);
  spec.drift_start_year = static_cast<int>(in.integer_or("drift_start_year", spec.drift_start_year));
  in.finish();
  spec.validate();
  return spec;
}

nlohmann::json SyntheticSpec::to_json() const {
  nlohmann::ordered_json j;
  j["label_scheme"] = LabelScheme(label_mode).name();
  j["uoas"] = nlohmann::ordered_json::array();
  for (const auto& u : uoas)
    j["uoas"].push_back({{"uoa", u.uoa}, {"n_articles", u.n_articles}, {"class_prior", u.class_prior}});
  j["planted"] = nlohmann::ordered_json::array();
  for (const auto& p : planted)
    j["planted"].push_back({{"class", p.cls}, {"token", p.token}, {"probability", p.probability}});
  j["citations"] = nlohmann::ordered_json::array();
  for (const auto& c : citations) j["citations"].push_back({{"mu", c.mu}, {"sigma", c.sigma}});
  j["filler_vocabulary"] = filler_vocabulary;
  j["n_journals"] = n_journals;
  j["journal_quality_bias"] = journal_quality_bias;
  j["n_fields"] = n_fields;
  j["n_institutions"] = n_institutions;
  j["institution_quality_spread"] = institution_quality_spread;
  j["year_min"] = year_min;
  j["year_max"] = year_max;
  j["noise"] = noise;
  j["duplicate_rate"] = duplicate_rate;
  j["cross_uoa_duplicate_share"] = cross_uoa_duplicate_share;
  j["duplicate_agreement"] = duplicate_agreement;
  j["ecr_rate"] = ecr_rate;
  j["female_rate"] = female_rate;
  j["gender_unknown_rate"] = gender_unknown_rate;
  j["interdisciplinary_rate"] = interdisciplinary_rate;
  j["missing_pages_rate"] = missing_pages_rate;
  j["drift_rate"] = drift_rate;
  j["drift_start_year"] = drift_start_year;
  return nlohmann::json::parse(j.dump());
}

SyntheticSpec SyntheticSpec::planted_demo(std::size_t n_articles, double noise) {
  SyntheticSpec spec;
  spec.uoas = {{1, n_articles, {0.3, 0.4, 0.3}}};
  spec.planted = {
      {0, "survey data", 0.45},     {0, "students", 0.4},         {0, "this article", 0.4},
      {0, "education", 0.35},       {1, "cohort study", 0.45},    {1, "regression model", 0.4},
      {1, "case series", 0.35},     {1, "secondary analysis", 0.3}, {2, "here we show", 0.5},
      {2, "randomly assigned", 0.4}, {2, "primary outcome", 0.4},  {2, "we", 0.6},
  };
  spec.citations = {{0.8, 0.9}, {1.4, 0.9}, {2.0, 0.9}};
  spec.noise = noise;
  return spec;
}

Corpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const LabelScheme scheme(spec.label_mode);
  const std::size_t n_classes = scheme.n_classes();

  Rng world(derive_seed(seed, 1));
  std::set<std::string> reserved;
  for (const auto& p : spec.planted)
    for (auto& w : split_words(p.token)) reserved.insert(w);
  const auto filler = make_filler(spec.filler_vocabulary, reserved, world);

  std::vector<std::vector<const PlantedToken*>> planted_by_class(n_classes);
  for (const auto& p : spec.planted) planted_by_class[static_cast<std::size_t>(p.cls)].push_back(&p);

  std::vector<std::string> journals;
  std::vector<std::vector<std::size_t>> journals_by_class(n_classes);
  for (std::size_t j = 0; j < spec.n_journals; ++j) {
    journals.push_back(fmt::format("Journal of {} {:02}", capitalized(filler[world.index(filler.size())]), j));
    journals_by_class[j % n_classes].push_back(j);
  }

  std::vector<double> field_offset;
  for (std::size_t f = 0; f < spec.n_fields; ++f) field_offset.push_back(0.3 * world.normal());

  std::vector<std::string> institutions;
  std::vector<double> institution_weight;
  std::vector<double> institution_quality;
  for (std::size_t i = 0; i < spec.n_institutions; ++i) {
    institutions.push_back(fmt::format("HEI-{:03}", i + 1));
    institution_weight.push_back(1.0 / std::pow(static_cast<double>(i + 1), 0.7));
    institution_quality.push_back(spec.institution_quality_spread * world.normal());
  }

  auto filler_words = [&](Rng& rng, std::size_t n) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back(filler[rng.index(filler.size())]);
    return words;
  };

  Corpus corpus;
  for (const auto& u : spec.uoas) {
    Rng rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(u.uoa)));
    for (std::size_t i = 0; i < u.n_articles; ++i) {
      ArticleRecord a;
      a.id = fmt::format("U{:02}-{:06}", u.uoa, i + 1);
      a.doi_group = fmt::format("10.5555/u{:02}.{:06}", u.uoa, i + 1);
      a.uoa = u.uoa;
      a.year = spec.year_min + static_cast<int>(rng.index(static_cast<std::size_t>(spec.year_max - spec.year_min + 1)));

      const std::size_t inst = rng.categorical(institution_weight);
      a.institution = institutions[inst];

      const double centre = (static_cast<double>(n_classes) - 1.0) / 2.0;
      std::vector<double> tilted(n_classes);
      for (std::size_t k = 0; k < n_classes; ++k)
        tilted[k] = u.class_prior[k] * std::exp(institution_quality[inst] * (static_cast<double>(k) - centre));
      const int latent = static_cast<int>(rng.categorical(tilted));
      const int label = rng.bernoulli(spec.noise) ? static_cast<int>(rng.categorical(u.class_prior)) : latent;
      a.score = star_for_class(scheme, label, rng);

      int vocab_class = latent;
      if (spec.drift_rate > 0.0 && a.year > spec.drift_start_year) {
        const double p = std::min(1.0, spec.drift_rate * (a.year - spec.drift_start_year));
        if (rng.bernoulli(p)) vocab_class = static_cast<int>((static_cast<std::size_t>(latent) + 1) % n_classes);
      }

      const std::size_t field = rng.index(spec.n_fields);
      a.field_id = fmt::format("F{:02}", field + 1);
      const auto& cm = spec.citations[static_cast<std::size_t>(latent)];
      const double age = static_cast<double>(spec.year_max - a.year);
      const double draw = rng.lognormal(cm.mu + field_offset[field] + 0.25 * age, cm.sigma);
      a.citations = static_cast<std::int64_t>(std::max(0.0, std::floor(draw - 0.5)));

      const auto& own = journals_by_class[static_cast<std::size_t>(latent)];
      const bool biased = !own.empty() && rng.bernoulli(spec.journal_quality_bias);
      a.journal = journals[biased ? own[rng.index(own.size())] : rng.index(journals.size())];

      const double q = static_cast<double>(latent);
      a.n_authors = 1 + static_cast<int>(std::floor(rng.lognormal(0.8 + 0.2 * q, 0.6)));
      a.n_institutions = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(a.n_authors)));
      a.n_countries = 1 + static_cast<int>(rng.index(std::min<std::size_t>(static_cast<std::size_t>(a.n_institutions), 3)));
      a.first_author_pubs = static_cast<std::int64_t>(std::floor(rng.lognormal(2.0 + 0.2 * q, 0.8)));
      a.first_author_mnlcs = rng.lognormal(-0.2 + 0.2 * q, 0.5);
      a.max_author_mnlcs = std::max(a.first_author_mnlcs, rng.lognormal(0.1 + 0.2 * q, 0.5));
      if (!rng.bernoulli(spec.missing_pages_rate)) a.pages = 5 + static_cast<int>(rng.index(20));

      // Abstract: filler sentences with the class vocabulary spliced in.
      std::vector<std::vector<std::string>> sentences;
      const std::size_t n_sentences = 8 + rng.index(4);
      for (std::size_t s = 0; s < n_sentences; ++s) sentences.push_back(filler_words(rng, 11 + rng.index(6)));
      const auto& tokens = planted_by_class[static_cast<std::size_t>(vocab_class)];
      std::vector<const PlantedToken*> chosen;
      for (const auto* t : tokens)
        if (rng.bernoulli(t->probability)) chosen.push_back(t);
      if (chosen.empty() && !tokens.empty()) chosen.push_back(tokens.front());
      for (const auto* t : chosen) {
        auto& sentence = sentences[rng.index(sentences.size())];
        const auto words = split_words(t->token);
        const auto at = static_cast<std::ptrdiff_t>(rng.index(sentence.size() + 1));
        sentence.insert(sentence.begin() + at, words.begin(), words.end());
      }
      std::string abstract;
      for (auto& sentence : sentences) {
        sentence.front() = capitalized(sentence.front());
        if (!abstract.empty()) abstract.push_back(' ');
        abstract += join(sentence) + '.';
      }
      a.abstract = std::move(abstract);
      auto title = filler_words(rng, 6 + rng.index(5));
      title.front() = capitalized(title.front());
      a.title = join(title);
      a.keywords = filler_words(rng, 3);

      a.ecr = rng.bernoulli(spec.ecr_rate);
      if (rng.bernoulli(spec.gender_unknown_rate)) a.gender_label = Gender::unknown;
      else a.gender_label = rng.bernoulli(spec.female_rate) ? Gender::female : Gender::male;
      a.interdisciplinary = rng.bernoulli(spec.interdisciplinary_rate);

      const bool duplicate = rng.bernoulli(spec.duplicate_rate);
      corpus.push_back(a);
      if (!duplicate) continue;

      ArticleRecord copy = a;
      copy.id = a.id + "-d";
      copy.institution = institutions[rng.categorical(institution_weight)];
      if (spec.uoas.size() > 1 && rng.bernoulli(spec.cross_uoa_duplicate_share)) {
        std::size_t pick = rng.index(spec.uoas.size() - 1);
        std::vector<int> others;
        for (const auto& o : spec.uoas)
          if (o.uoa != u.uoa) others.push_back(o.uoa);
        copy.uoa = others[pick];
      }
      if (!rng.bernoulli(spec.duplicate_agreement)) {
        const int other = static_cast<int>((static_cast<std::size_t>(label) + 1 + rng.index(n_classes - 1)) % n_classes);
        copy.score = star_for_class(scheme, other, rng);
      }
      corpus.push_back(std::move(copy));
    }
  }
  return corpus;
}

}  // namespace refscore
