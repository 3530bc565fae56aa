#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "refscore/errors.hpp"
#include "refscore/evaluation.hpp"

using namespace refscore;
using refscore::testing::make_article;

TEST_SUITE("evaluation") {
  TEST_CASE("accuracy above the modal baseline") {
    const std::vector<int> truth = {1, 1, 1, 2, 0};
    const auto perfect = accuracy(truth, truth);
    CHECK(perfect.raw == 1.0);
    CHECK(perfect.above_baseline == doctest::Approx(1.0 - 0.6));
    const std::vector<int> modal(5, 1);
    CHECK(accuracy(modal, truth).above_baseline == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}), PreconditionError);
    CHECK_THROWS_AS(accuracy(std::vector<int>{1}, std::vector<int>{1, 2}), PreconditionError);

    // 72% raw against a 30% modal share.
    std::vector<int> t(100), p(100);
    for (int i = 0; i < 100; ++i) {
      t[i] = i < 30 ? 0 : i < 60 ? 1 : i < 90 ? 2 : 3;
      p[i] = i < 72 ? t[i] : (t[i] + 1) % 4;
    }
    const auto r = accuracy(p, t);
    CHECK(r.raw == doctest::Approx(0.72));
    CHECK(r.above_baseline == doctest::Approx(0.42));
  }

  TEST_CASE("accuracy and power match brute force") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.index(100);
      std::vector<int> p(n), t(n);
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = 1 + static_cast<int>(rng.index(4));
        t[i] = 1 + static_cast<int>(rng.index(4));
      }
      const auto got = accuracy(p, t);
      const auto want = oracle::accuracy(p, t);
      CHECK(std::abs(got.raw - want.raw) <= 1e-9);
      CHECK(std::abs(got.baseline - want.baseline) <= 1e-9);
      CHECK(got.above_baseline >= -got.baseline - 1e-12);
      CHECK(got.above_baseline <= 1.0 - got.baseline + 1e-12);
      const double power = research_power(p);
      CHECK(std::abs(power - oracle::power(p)) <= 1e-9);
      CHECK(power >= 0.0);
      CHECK(power <= 100.0);
      // Raising one score never lowers power.
      auto raised = p;
      const std::size_t k = rng.index(n);
      raised[k] = std::min(4, raised[k] + 1);
      CHECK(research_power(raised) >= power);
    }
  }

  TEST_CASE("research power examples") {
    CHECK(research_power(std::vector<int>{4, 4}) == 100.0);
    CHECK(research_power(std::vector<int>{4, 3, 2}) == doctest::Approx(41.667).epsilon(1e-4));
    CHECK(research_power(std::vector<int>{2, 2}) == 0.0);
    CHECK_THROWS_AS(research_power(std::vector<int>{}), PreconditionError);
  }

  TEST_CASE("institutional shift") {
    std::vector<InstitutionArticle> same = {{"A", 3, 3}, {"A", 4, 4}, {"B", 2, 2}};
    auto r = institutional_shift({same}, std::vector<double>{0.5});
    for (const auto& s : r.institutions) CHECK(s.gain.mean == 0.0);

    std::vector<InstitutionArticle> up = {{"solo", 2, 4}};
    r = institutional_shift({up}, std::vector<double>{0.313});
    CHECK(r.institutions[0].gain.mean == 100.0);
    CHECK(r.institutions[0].overall_gain.mean == doctest::Approx(31.3));

    const std::vector<std::string> roster = {"A", "B", "ghost"};
    r = institutional_shift({same}, std::vector<double>{0.5}, roster);
    CHECK(r.excluded == std::vector<std::string>{"ghost"});
  }

  TEST_CASE("institution gains weighted by size sum to the corpus-level delta") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<InstitutionArticle> articles;
      std::vector<int> human, predicted;
      const std::size_t n = 1 + rng.index(100);
      for (std::size_t i = 0; i < n; ++i) {
        const int h = 1 + static_cast<int>(rng.index(4));
        const int p = 1 + static_cast<int>(rng.index(4));
        articles.push_back({fmt::format("i{}", rng.index(6)), h, p});
        human.push_back(h);
        predicted.push_back(p);
      }
      const auto report = institutional_shift({articles}, std::vector<double>{1.0});
      double weighted = 0.0, total = 0.0;
      for (const auto& s : report.institutions) {
        weighted += s.gain.mean * s.mean_articles;
        total += s.mean_articles;
        // Brute force per institution.
        std::vector<int> h, p;
        for (const auto& a : articles)
          if (a.institution == s.institution) {
            h.push_back(a.human);
            p.push_back(a.predicted);
          }
        CHECK(std::abs(s.gain.mean - (oracle::power(p) - oracle::power(h))) <= 1e-9);
      }
      CHECK(total == static_cast<double>(n));
      CHECK(std::abs(weighted / total - (oracle::power(predicted) - oracle::power(human))) <= 1e-9);
    }
  }

  TEST_CASE("pearson examples and oracle") {
    const std::vector<double> x = {1, 2, 3};
    CHECK(*pearson(x, std::vector<double>{3, 5, 7}) == doctest::Approx(1.0));
    CHECK(*pearson(x, std::vector<double>{-1, -2, -3}) == doctest::Approx(-1.0));
    CHECK(*pearson(x, std::vector<double>{1, 3, 2}) == doctest::Approx(0.5));
    CHECK_FALSE(pearson(x, std::vector<double>{2, 2, 2}).has_value());
    CHECK_FALSE(pearson(std::vector<double>{1}, std::vector<double>{1}).has_value());

    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng.index(99);
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.normal() * 10;
        b[i] = 0.5 * a[i] + rng.normal() * 5;
      }
      const auto got = pearson(a, b);
      const auto want = oracle::pearson(a, b);
      REQUIRE(got.has_value() == want.has_value());
      if (want) CHECK(std::abs(*got - *want) <= 1e-9);
    }
  }

  TEST_CASE("institution correlations") {
    std::vector<UoaInstitutionScore> rows;
    for (int i = 0; i < 5; ++i)
      for (int k = 0; k <= i; ++k) rows.push_back({1, fmt::format("inst{}", i), 1 + (i + k) % 4, 1 + (i + k) % 4});
    for (auto mode : {CorrelationMode::average, CorrelationMode::total})
      CHECK(*institution_correlations(rows, mode).at(1) == doctest::Approx(1.0));
    for (auto& r : rows) r.predicted = 3;
    CHECK_FALSE(institution_correlations(rows, CorrelationMode::average).at(1).has_value());
  }

  TEST_CASE("gpa rank shift") {
    const std::vector<GpaOutput> outputs = {{"a", "A", 3}, {"b", "B", 2}};
    const auto none = gpa_rank_shift(outputs, {{}, {}});
    for (const auto& r : none.institutions) CHECK(r.rank_delta.max == 0.0);

    const auto swap = gpa_rank_shift(outputs, {{{"b", 4}}});
    CHECK(swap.institutions[0].institution == "A");
    CHECK(swap.institutions[0].rank_delta.mean == -1.0);
    CHECK(swap.institutions[1].rank_delta.mean == 1.0);

    // 1* counts as 2*.
    const std::vector<GpaOutput> low = {{"x", "X", 1}, {"y", "X", 3}};
    CHECK(gpa_rank_shift(low, {{}}).institutions[0].human_gpa == 2.5);

    CHECK_THROWS_AS(gpa_rank_shift(outputs, {{{"zzz", 4}}}), LookupError);

    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<GpaOutput> outs;
      const std::size_t n = 2 + rng.index(60);
      for (std::size_t i = 0; i < n; ++i)
        outs.push_back({fmt::format("o{}", i), fmt::format("I{}", rng.index(8)), 1 + static_cast<int>(rng.index(4))});
      std::map<std::string, int> sub;
      for (std::size_t i = 0; i < n; ++i)
        if (rng.bernoulli(0.3)) sub[outs[i].id] = 1 + static_cast<int>(rng.index(4));
      const auto report = gpa_rank_shift(outs, {sub});
      int sum = 0;
      for (int d : report.deltas[0]) sum += d;
      CHECK(sum == 0);
    }
  }

  TEST_CASE("subgroup shift") {
    std::vector<SubgroupArticle> it = {
        {std::string("ecr"), 3, 4}, {std::string("ecr"), 3, 4}, {std::string("experienced"), 2, 2}, {std::nullopt, 2, 4}};
    const std::vector<std::string> groups = {"ecr", "experienced", "empty"};
    const auto r = subgroup_shift({it}, groups);
    REQUIRE(r.groups.size() == 2);
    CHECK(r.groups[0].gain.mean == 75.0);
    CHECK(r.groups[1].gain.mean == 0.0);
    CHECK(r.groups[0].articles == 2);
    CHECK(r.empty_groups == std::vector<std::string>{"empty"});

    for (auto& a : it) a.predicted = a.human;
    for (const auto& g : subgroup_shift({it}, groups).groups) CHECK(g.gain.mean == 0.0);
  }

  TEST_CASE("size and quality correlations") {
    const std::vector<double> flat = {1, 1, 1, 1};
    const std::vector<double> size = {10, 20, 30, 40};
    const auto undefined = size_quality_correlations(flat, size, size, size);
    CHECK_FALSE(undefined.institution_size.has_value());

    Rng rng(4);
    std::vector<double> gain, inst, sub, power;
    for (int i = 0; i < 40; ++i) {
      const double s = 10 + i * 5;
      inst.push_back(s);
      sub.push_back(s / 2);
      power.push_back(rng.uniform() * 100);
      gain.push_back(-0.2 * s + rng.normal());
    }
    const auto r = size_quality_correlations(gain, inst, sub, power);
    CHECK(*r.institution_size < 0.0);
    CHECK(*r.submission_size < 0.0);
  }

  TEST_CASE("half-sample doubling") {
    Corpus corpus;
    for (int i = 0; i < 6; ++i) {
      auto a = make_article(fmt::format("s{}", i), 1, 3);
      a.institution = "same";
      corpus.push_back(a);
    }
    for (int s : {4, 2}) {
      auto a = make_article(fmt::format("t{}", s), 1, s);
      a.institution = "two";
      corpus.push_back(a);
    }
    auto lone = make_article("lone", 1, 4);
    lone.institution = "lone";
    corpus.push_back(lone);
    const auto r = half_sample_doubling(corpus, 2, 50, 7);
    REQUIRE(r.size() == 2);
    CHECK(r[0].institution == "same");
    for (double e : r[0].estimates) CHECK(e == r[0].true_power);
    for (double e : r[1].estimates) CHECK((e == 100.0 || e == 0.0));
    CHECK(r[1].estimate.min == 0.0);
    CHECK(r[1].estimate.max == 100.0);

    Corpus big;
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
      auto a = make_article(fmt::format("b{}", i), 1, 1 + static_cast<int>(rng.index(4)));
      a.institution = "big";
      big.push_back(a);
    }
    const auto est = half_sample_doubling(big, 20, 200, 3);
    REQUIRE(est.size() == 1);
    CHECK(std::abs(est[0].estimate.mean - est[0].true_power) <= 2.0);
  }

  TEST_CASE("blended accuracy") {
    CHECK(blend_overall_accuracy(0.5, 0.72, 1.0).eligible == doctest::Approx(0.86));
    CHECK(blend_overall_accuracy(0.9, 0.72, 1.0).eligible == doctest::Approx(0.972));
    CHECK(blend_overall_accuracy(0.5, 0.72, 0.626).all_articles == doctest::Approx(0.91236));
    const auto one = blend_overall_accuracy(1.0, 0.3, 0.4);
    CHECK(one.eligible == 1.0);
    CHECK(one.all_articles == 1.0);
    CHECK_THROWS_AS(blend_overall_accuracy(1.2, 0.5, 0.5), PreconditionError);

    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
      const double h = rng.uniform(), a = rng.uniform(), e = rng.uniform(), d = 0.01;
      const auto base = blend_overall_accuracy(h, a, e);
      CHECK(blend_overall_accuracy(std::min(1.0, h + d), a, e).eligible >= base.eligible);
      CHECK(blend_overall_accuracy(h, std::min(1.0, a + d), e).eligible >= base.eligible);
      CHECK(blend_overall_accuracy(h, a, std::min(1.0, e + d)).all_articles <= base.all_articles + 1e-15);
    }
  }
}
