#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "fixtures.hpp"
#include "refscore/corpus.hpp"
#include "refscore/errors.hpp"
#include "refscore/labels.hpp"
#include "refscore/synthetic.hpp"
#include "refscore/text.hpp"

using namespace refscore;
using refscore::testing::make_article;

TEST_SUITE("text") {
  TEST_CASE("clean_text collapses whitespace, strips tags and is idempotent") {
    CHECK(clean_text("a  b\n c") == "a b c");
    CHECK(clean_text("<p>x</p>") == "x");
    CHECK(clean_text("") == "");
    CHECK(clean_text("  <b>bold</b>\ttext \x01 end ") == "bold text end");
    Rng rng(5);
    const std::string alphabet = "ab <>/p\n\t .";
    for (int trial = 0; trial < 300; ++trial) {
      std::string raw;
      const std::size_t len = rng.index(40);
      for (std::size_t i = 0; i < len; ++i) raw += alphabet[rng.index(alphabet.size())];
      const auto once = clean_text(raw);
      CHECK(clean_text(once) == once);
      CHECK(once.find("  ") == std::string::npos);
    }
  }

  TEST_CASE("utf8_length counts code points") {
    CHECK(utf8_length("abc") == 3);
    CHECK(utf8_length("caf\xc3\xa9") == 4);
  }

  TEST_CASE("syllable heuristic") {
    CHECK(count_syllables("the") == 1);
    CHECK(count_syllables("cat") == 1);
    CHECK(count_syllables("make") == 1);
    CHECK(count_syllables("reading") == 2);
    CHECK(count_syllables("rhythm") == 1);
  }

  TEST_CASE("flesch_kincaid matches hand counts") {
    const auto fk = flesch_kincaid("The cat sat.");
    REQUIRE(fk.has_value());
    CHECK(*fk == doctest::Approx(0.39 * 3 + 11.8 * 1 - 15.59).epsilon(1e-12));
    CHECK(*fk == doctest::Approx(-2.62).epsilon(1e-12));
    const auto doubled = flesch_kincaid("The cat sat. The cat sat.");
    REQUIRE(doubled.has_value());
    CHECK(*doubled == doctest::Approx(*fk).epsilon(1e-12));
    CHECK_FALSE(flesch_kincaid("").has_value());
    CHECK_FALSE(flesch_kincaid("  ... ").has_value());
  }

  TEST_CASE("tokenize keeps n-grams inside sentences") {
    const auto terms = tokenize("", "We show that. It works.", {});
    auto has = [&](TermKind k, const std::string& t) {
      return std::find(terms.begin(), terms.end(), Term{k, t}) != terms.end();
    };
    CHECK(has(TermKind::bigram, "we show"));
    CHECK(has(TermKind::bigram, "show that"));
    CHECK(has(TermKind::bigram, "it works"));
    CHECK_FALSE(has(TermKind::bigram, "that it"));
    CHECK(has(TermKind::trigram, "we show that"));
    CHECK_FALSE(has(TermKind::trigram, "that it works"));

    const auto title = tokenize("Graphene", "", {});
    CHECK(std::find(title.begin(), title.end(), Term{TermKind::unigram, "graphene"}) != title.end());
    CHECK(tokenize("", "", {}).empty());

    const auto kw = tokenize("", "", {"deep learning", "graphs"});
    CHECK(std::find(kw.begin(), kw.end(), Term{TermKind::bigram, "deep learning"}) != kw.end());
    CHECK(std::find(kw.begin(), kw.end(), Term{TermKind::bigram, "learning graphs"}) == kw.end());
  }

  TEST_CASE("every bigram's words are emitted as unigrams and output is a sorted set") {
    Rng rng(11);
    const std::vector<std::string> words = {"alpha", "beta", "gamma", "x-ray", "we", "show", "a1"};
    for (int trial = 0; trial < 100; ++trial) {
      std::string text;
      const std::size_t n = 1 + rng.index(30);
      for (std::size_t i = 0; i < n; ++i) {
        text += words[rng.index(words.size())];
        text += rng.bernoulli(0.15) ? ". " : " ";
      }
      const auto terms = tokenize("", text, {});
      CHECK(std::is_sorted(terms.begin(), terms.end()));
      CHECK(std::adjacent_find(terms.begin(), terms.end()) == terms.end());
      for (const auto& t : terms) {
        if (t.kind != TermKind::bigram) continue;
        const auto space = t.text.find(' ');
        REQUIRE(space != std::string::npos);
        for (const auto& w : {t.text.substr(0, space), t.text.substr(space + 1)})
          CHECK(std::find(terms.begin(), terms.end(), Term{TermKind::unigram, w}) != terms.end());
      }
    }
  }
}

TEST_SUITE("corpus") {
  TEST_CASE("label scheme merges the two lowest grades in three-class mode") {
    const LabelScheme three(LabelMode::three_class);
    CHECK(three.class_of(1) == three.class_of(2));
    CHECK(three.class_of(2) < three.class_of(3));
    CHECK(three.class_of(3) < three.class_of(4));
    CHECK(three.representative_score(three.class_of(1)) == 2);
    const LabelScheme four(LabelMode::four_class);
    CHECK(four.n_classes() == 4);
    for (int s = 1; s <= 4; ++s) CHECK(four.class_of(s) == s - 1);
    CHECK_THROWS_AS(three.class_of(5), ValueError);
    CHECK(LabelScheme::parse("four_class") == four);
  }

  TEST_CASE("JSONL ingestion preserves order and optional fields") {
    Corpus rows = {make_article("a1"), make_article("a2"), make_article("a3")};
    rows[1].pages = 12;
    rows[2].score.reset();
    rows[2].ecr = true;
    rows[2].gender_label = Gender::female;
    rows[0].keywords = {"k one", "k two"};
    std::stringstream buffer;
    write_jsonl(buffer, rows);
    const auto parsed = parse_jsonl(buffer);
    REQUIRE(parsed.size() == 3);
    CHECK(parsed == rows);
    CHECK_FALSE(parsed[0].pages.has_value());
    CHECK(parsed[1].pages == 12);
  }

  TEST_CASE("CSV round trip") {
    Corpus rows = {make_article("a1"), make_article("a2")};
    rows[0].title = "Comma, \"quoted\" title";
    rows[1].interdisciplinary = false;
    rows[1].journal_mnlcs = 1.25;
    std::stringstream buffer;
    write_csv(buffer, rows);
    const auto parsed = parse_csv(buffer);
    CHECK(parsed == rows);
  }

  TEST_CASE("ingestion errors name the row and field") {
    std::stringstream bad_score(R"({"id":"a","doi_group":"d","uoa":1,"year":2015,"score":5,"title":"t","abstract":"","keywords":[],"journal":"j","field_id":"f","citations":0,"n_authors":1,"n_institutions":1,"n_countries":1,"first_author_pubs":0,"first_author_mnlcs":0,"max_author_mnlcs":0,"institution":"i"})");
    try {
      parse_jsonl(bad_score);
      FAIL("expected ValueError");
    } catch (const ValueError& e) {
      CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
    std::stringstream missing(R"({"id":"a","uoa":1})");
    try {
      parse_jsonl(missing);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("row 1") != std::string::npos);
      CHECK(std::string(e.what()).find("doi_group") != std::string::npos);
    }
  }

  TEST_CASE("inclusion drops by first failing rule and counts partition the removals") {
    InclusionPolicy policy;
    auto late = make_article("late");
    late.year = 2019;
    late.score = 0;
    auto zero = make_article("zero");
    zero.score = 0;
    auto shortabs = make_article("short");
    shortabs.abstract = std::string(499, 'y');
    auto edge = make_article("edge");
    edge.abstract = std::string(500, 'y');
    const Corpus corpus = {late, zero, shortabs, edge, make_article("ok")};
    const auto result = apply_inclusion(corpus, policy);
    CHECK(result.dropped.at("year") == 1);
    CHECK(result.dropped.at("score") == 1);
    CHECK(result.dropped.at("abstract") == 1);
    REQUIRE(result.kept.size() == 2);
    CHECK(result.kept[0].id == "edge");
    std::size_t total = 0;
    for (const auto& [reason, n] : result.dropped) total += n;
    CHECK(total == corpus.size() - result.kept.size());

    InclusionPolicy bad;
    bad.year_min = 2020;
    bad.year_max = 2010;
    CHECK_THROWS_AS(validate(bad), ConfigError);
  }

  TEST_CASE("dedup keeps the median score per (uoa, doi_group)") {
    auto group = [](std::vector<int> scores, int uoa = 1, std::string doi = "g") {
      Corpus c;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        auto a = make_article(doi + std::to_string(i) + "u" + std::to_string(uoa), uoa, scores[i]);
        a.doi_group = doi;
        c.push_back(a);
      }
      return c;
    };
    auto odd = dedup_within_uoa(group({2, 3, 4}), 1);
    REQUIRE(odd.size() == 1);
    CHECK(odd[0].score == 3);

    std::set<int> seen;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto a = dedup_within_uoa(group({3, 4}), seed);
      const auto b = dedup_within_uoa(group({3, 4}), seed);
      REQUIRE(a.size() == 1);
      CHECK(a == b);
      seen.insert(*a[0].score);
    }
    CHECK(seen == std::set<int>{3, 4});

    const auto single = group({2});
    CHECK(dedup_within_uoa(single, 9) == single);

    auto cross = group({3, 3}, 1);
    auto other = group({4}, 2);
    cross.insert(cross.end(), other.begin(), other.end());
    const auto deduped = dedup_within_uoa(cross, 3);
    CHECK(deduped.size() == 2);
  }

  TEST_CASE("dedup is idempotent and preserves distinct keys on random corpora") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
      Corpus corpus;
      const std::size_t n = 1 + rng.index(60);
      for (std::size_t i = 0; i < n; ++i) {
        auto a = make_article("a" + std::to_string(i), 1 + static_cast<int>(rng.index(3)),
                              1 + static_cast<int>(rng.index(4)));
        a.doi_group = "d" + std::to_string(rng.index(15));
        corpus.push_back(a);
      }
      std::set<std::pair<int, std::string>> keys;
      for (const auto& a : corpus) keys.insert({a.uoa, a.doi_group});
      const auto once = dedup_within_uoa(corpus, trial);
      CHECK(once.size() == keys.size());
      CHECK(dedup_within_uoa(once, trial + 1) == once);
    }
  }

  TEST_CASE("agreement examples") {
    auto dup = [](std::string id, int uoa, int score) {
      auto a = make_article(id, uoa, score);
      a.doi_group = "g";
      return a;
    };
    const Corpus two = {dup("a", 1, 3), dup("b", 1, 3)};
    CHECK(agreement_stats(two, AgreementScope::within_uoa).agreement == 1.0);
    const Corpus three = {dup("a", 1, 3), dup("b", 1, 3), dup("c", 1, 4)};
    CHECK(*agreement_stats(three, AgreementScope::within_uoa).agreement == doctest::Approx(1.0 / 3.0));
    const Corpus none = {make_article("a"), make_article("b")};
    CHECK(agreement_stats(none, AgreementScope::within_uoa).undefined());
    CHECK(agreement_stats(none, AgreementScope::between_uoa).undefined());
    const Corpus merged = {dup("a", 1, 1), dup("b", 1, 2)};
    const auto m = agreement_stats(merged, AgreementScope::within_uoa);
    CHECK(m.agreement == 0.0);
    CHECK(m.agreement_merged == 1.0);
  }

  TEST_CASE("between-uoa extrapolation is the least-squares line at group size one") {
    // Size-2 groups agree fully, size-3 groups agree on 1 of 3 cross pairs.
    auto add = [](Corpus& c, std::string doi, std::vector<std::pair<int, int>> members) {
      for (std::size_t i = 0; i < members.size(); ++i) {
        auto a = make_article(doi + std::to_string(i), members[i].first, members[i].second);
        a.doi_group = doi;
        c.push_back(a);
      }
    };
    Corpus c;
    add(c, "p", {{1, 3}, {2, 3}});
    add(c, "q", {{1, 3}, {2, 3}, {3, 4}});
    const auto r = agreement_stats(c, AgreementScope::between_uoa);
    REQUIRE(r.by_group_size.size() == 2);
    CHECK(r.by_group_size.at(2).rate() == 1.0);
    CHECK(r.by_group_size.at(3).rate() == doctest::Approx(1.0 / 3.0));
    // Line through (2, 1) and (3, 1/3) evaluated at 1 gives 5/3, clamped to 1.
    REQUIRE(r.extrapolated_single.has_value());
    CHECK(*r.extrapolated_single == 1.0);
  }

  TEST_CASE("agreement_stats matches all-pairs enumeration") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
      Corpus corpus;
      const std::size_t n = 2 + rng.index(199);
      for (std::size_t i = 0; i < n; ++i) {
        std::optional<int> score = static_cast<int>(rng.index(5));
        if (rng.bernoulli(0.05)) score.reset();
        auto a = make_article("a" + std::to_string(i), 1 + static_cast<int>(rng.index(3)), score);
        a.doi_group = "d" + std::to_string(rng.index(n / 2 + 1));
        corpus.push_back(a);
      }
      for (bool within : {true, false}) {
        const auto got = agreement_stats(corpus, within ? AgreementScope::within_uoa : AgreementScope::between_uoa);
        const auto want = oracle::agreement(corpus, within);
        CHECK(got.n_pairs == want.pairs);
        if (want.pairs == 0) {
          CHECK(got.undefined());
          continue;
        }
        CHECK(*got.agreement == doctest::Approx(double(want.agreeing) / double(want.pairs)).epsilon(1e-12));
        CHECK(*got.agreement_merged ==
              doctest::Approx(double(want.agreeing_merged) / double(want.pairs)).epsilon(1e-12));
        if (within) {
          CHECK(got.per_uoa.size() == want.per_uoa.size());
          for (const auto& [uoa, pa] : want.per_uoa)
            CHECK(got.per_uoa.at(uoa) == doctest::Approx(double(pa.second) / double(pa.first)).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("journal homogeneity examples and oracle") {
    auto in_journal = [](std::string id, std::string journal, int score) {
      auto a = make_article(id, 1, score);
      a.journal = journal;
      return a;
    };
    CHECK(journal_homogeneity(Corpus{in_journal("a", "J", 3), in_journal("b", "J", 3), in_journal("c", "J", 3)})
              .overall == 1.0);
    CHECK(journal_homogeneity(Corpus{in_journal("a", "J", 3), in_journal("b", "J", 4)}).overall == 0.0);
    CHECK(*journal_homogeneity(Corpus{in_journal("a", "J", 3), in_journal("b", "J", 3), in_journal("c", "K", 3),
                                      in_journal("d", "K", 4)})
               .overall == doctest::Approx(0.5));
    CHECK_FALSE(journal_homogeneity(Corpus{in_journal("a", "J", 3), in_journal("b", "K", 3)}).overall.has_value());

    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      Corpus corpus;
      const std::size_t n = 1 + rng.index(100);
      for (std::size_t i = 0; i < n; ++i) {
        auto a = make_article("a" + std::to_string(i), 1 + static_cast<int>(rng.index(2)),
                              1 + static_cast<int>(rng.index(4)));
        a.journal = "J" + std::to_string(rng.index(12));
        corpus.push_back(a);
      }
      const auto got = journal_homogeneity(corpus);
      const auto want = oracle::homogeneity(corpus);
      REQUIRE(got.overall.has_value() == want.has_value());
      if (want) CHECK(std::abs(*got.overall - *want) <= 1e-12);
      for (const auto& [uoa, value] : got.per_uoa) {
        const auto w = oracle::homogeneity(corpus, uoa);
        REQUIRE(value.has_value() == w.has_value());
        if (w) CHECK(std::abs(*value - *w) <= 1e-12);
      }
    }
  }
}

TEST_SUITE("synthetic") {
  TEST_CASE("generation is deterministic") {
    auto spec = SyntheticSpec::planted_demo(300, 0.1);
    spec.duplicate_rate = 0.1;
    std::stringstream a, b, c;
    write_jsonl(a, generate_synthetic(spec, 42));
    write_jsonl(b, generate_synthetic(spec, 42));
    write_jsonl(c, generate_synthetic(spec, 43));
    CHECK(a.str() == b.str());
    CHECK(a.str() != c.str());
  }

  TEST_CASE("noise-free articles carry a token unique to their class") {
    const auto spec = SyntheticSpec::planted_demo(400, 0.0);
    const LabelScheme scheme;
    const auto corpus = generate_synthetic(spec, 3);
    // Single-word planted tokens that belong to exactly one class.
    for (const auto& a : corpus) {
      const int cls = scheme.class_of(*a.score);
      const auto terms = tokenize(a.title, a.abstract, a.keywords);
      bool found = false;
      for (const auto& p : spec.planted) {
        if (p.cls != cls) continue;
        const auto words = split_words(p.token);
        const TermKind kind = words.size() == 1 ? TermKind::unigram
                              : words.size() == 2 ? TermKind::bigram
                                                  : TermKind::trigram;
        if (std::find(terms.begin(), terms.end(), Term{kind, p.token}) != terms.end()) found = true;
      }
      CHECK_MESSAGE(found, a.id);
    }
  }

  TEST_CASE("class counts stay within four standard deviations of the prior") {
    SyntheticSpec spec = SyntheticSpec::planted_demo(1000, 0.0);
    spec.uoas[0].class_prior = {0.2, 0.5, 0.3};
    // Institution quality tilts the per-article prior; switch it off.
    spec.institution_quality_spread = 0.0;
    const LabelScheme scheme;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto corpus = generate_synthetic(spec, seed);
      REQUIRE(corpus.size() == 1000);
      std::vector<double> counts(3, 0.0);
      for (const auto& a : corpus) counts[static_cast<std::size_t>(scheme.class_of(*a.score))] += 1;
      for (std::size_t k = 0; k < 3; ++k) {
        const double p = spec.uoas[0].class_prior[k];
        const double sd = std::sqrt(1000 * p * (1 - p));
        CHECK(std::abs(counts[k] - 1000 * p) <= 4 * sd);
      }
    }
  }

  TEST_CASE("invalid specs are rejected with the field name") {
    auto spec = SyntheticSpec::planted_demo(100, 0.1);
    spec.uoas[0].class_prior = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = SyntheticSpec::planted_demo(100, 1.5);
    try {
      spec.validate();
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("noise") != std::string::npos);
    }
    const auto demo = SyntheticSpec::planted_demo(100, 0.2);
    CHECK(SyntheticSpec::from_json(demo.to_json()).to_json() == demo.to_json());
  }
}
