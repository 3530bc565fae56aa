#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "refscore/boost.hpp"
#include "refscore/errors.hpp"
#include "refscore/forest.hpp"
#include "refscore/model.hpp"
#include "refscore/parallel.hpp"
#include "refscore/tree.hpp"

using namespace refscore;
using refscore::testing::dense_matrix;
using refscore::testing::random_labels;
using refscore::testing::random_matrix;
using refscore::testing::separable_labels;

namespace {

void check_prob_vectors(const std::vector<ProbVector>& probs, std::size_t n_classes) {
  for (const auto& pv : probs) {
    REQUIRE(pv.p.size() == n_classes);
    double sum = 0.0;
    for (double v : pv.p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

double train_accuracy(const std::vector<ProbVector>& probs, const std::vector<int>& y) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += probs[i].predicted() == y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

// Split rows [0, n) into two halves.
std::pair<FeatureMatrix, FeatureMatrix> halves(const FeatureMatrix& m) {
  std::vector<std::size_t> a(m.rows() / 2), b(m.rows() - m.rows() / 2);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), a.size());
  return {m.subset(a), m.subset(b)};
}

}  // namespace

TEST_SUITE("learners") {
  TEST_CASE("ProbVector argmax ties go to the lower class") {
    CHECK(ProbVector{{0.4, 0.4, 0.2}}.predicted() == 0);
    CHECK(ProbVector{{0.2, 0.4, 0.4}}.predicted() == 1);
    CHECK(ProbVector{{0.2, 0.4, 0.4}}.confidence() == 0.4);
  }

  TEST_CASE("pure labels give a single leaf") {
    const auto m = dense_matrix(4, 1, {1, 2, 3, 4});
    const std::vector<int> y(4, 2);
    const auto tree = fit_tree(m, y, 3, TreeParams{}, 1);
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].value == std::vector<double>{0, 0, 1});
    CHECK(predict_proba(Model{fit_forest(m, y, 3, ForestParams{}, 1)}, m)[0].p == std::vector<double>{0, 0, 1});
  }

  TEST_CASE("separable single feature gives a depth-one tree") {
    const auto m = dense_matrix(6, 1, {1, 2, 3, 10, 11, 12});
    const std::vector<int> y = {0, 0, 0, 1, 1, 1};
    const auto tree = fit_tree(m, y, 2, TreeParams{}, 1);
    CHECK(tree.depth() == 1);
    CHECK(tree.nodes[0].threshold == 6.5);
    for (std::size_t r = 0; r < 6; ++r) CHECK(tree_predict(tree, m, r).predicted() == y[r]);
  }

  TEST_CASE("root split equals exhaustive search") {
    // Hand case: four rows, two features.
    const auto hand = dense_matrix(4, 2, {0, 5, 1, 3, 2, 4, 3, 1});
    const std::vector<int> hy = {0, 1, 1, 0};
    const auto want = oracle::best_split(hand, hy, 2);
    const auto tree = fit_tree(hand, hy, 2, TreeParams{}, 3);
    REQUIRE(tree.nodes[0].feature >= 0);
    CHECK(static_cast<std::size_t>(tree.nodes[0].feature) == want.feature);
    CHECK(tree.nodes[0].threshold == want.threshold);

    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 4 + rng.index(30);
      const std::size_t k = 2 + rng.index(2);
      const auto m = random_matrix(rng, n, 1 + rng.index(4), rng.index(3), 0.4, 5);
      const auto y = random_labels(rng, n, k);
      const auto expected = oracle::best_split(m, y, k);
      TreeParams params;
      params.max_depth = 1;
      const auto t = fit_tree(m, y, k, params, trial);
      if (expected.gain <= 1e-12) {
        CHECK(t.nodes.size() == 1);
        continue;
      }
      REQUIRE(t.nodes.size() == 3);
      CHECK(static_cast<std::size_t>(t.nodes[0].feature) == expected.feature);
      CHECK(t.nodes[0].threshold == doctest::Approx(expected.threshold).epsilon(1e-12));
      CHECK(t.nodes[0].gain == doctest::Approx(expected.gain).epsilon(1e-9));
    }
  }

  TEST_CASE("tree parameter validation") {
    const auto empty = dense_matrix(0, 1, {});
    CHECK_THROWS_AS(fit_tree(empty, std::vector<int>{}, 2, TreeParams{}, 1), PreconditionError);
    TreeParams bad;
    bad.max_depth = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TreeParams{};
    bad.min_samples_split = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    TreeParams sq;
    sq.feature_rule = FeatureRule::sqrt;
    CHECK(sq.features_per_split(1000) == 31);
    CHECK(TreeParams{}.features_per_split(17) == 17);
  }

  TEST_CASE("forest of one unbootstrapped tree equals the single tree") {
    Rng rng(5);
    const auto m = random_matrix(rng, 80, 4, 3);
    const auto y = random_labels(rng, 80, 3);
    ForestParams params;
    params.n_trees = 1;
    params.bootstrap = false;
    params.tree.feature_rule = FeatureRule::all;
    const auto forest = fit_forest(m, y, 3, params, 9);
    const auto tree = fit_tree(m, y, 3, params.tree, 123);
    const auto probs = predict_proba(forest, m);
    for (std::size_t r = 0; r < m.rows(); ++r) CHECK(probs[r].p == tree_predict(tree, m, r).p);
  }

  TEST_CASE("forest averages leaf distributions") {
    ForestModel model;
    model.n_classes = 3;
    for (auto leaf : {std::vector<double>{1, 0, 0}, std::vector<double>{1, 0, 0}, std::vector<double>{0, 1, 0}}) {
      Tree t;
      t.nodes.push_back(TreeNode{});
      t.nodes[0].value = leaf;
      model.trees.push_back(t);
    }
    const auto m = dense_matrix(1, 1, {0.0});
    const auto p = predict_proba(model, m)[0].p;
    CHECK(p[0] == doctest::Approx(2.0 / 3.0));
    CHECK(p[1] == doctest::Approx(1.0 / 3.0));
    CHECK(p[2] == 0.0);

    ForestParams none;
    none.n_trees = 0;
    CHECK_THROWS_AS(none.validate(), ConfigError);
  }

  TEST_CASE("forest probabilities equal the per-tree brute force exactly") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 10 + rng.index(90);
      const auto m = random_matrix(rng, n, 3, 4);
      const auto y = random_labels(rng, n, 3);
      ForestParams params;
      params.n_trees = 1 + rng.index(5);
      const auto model = fit_forest(m, y, 3, params, trial);
      const auto got = predict_proba(model, m);
      const auto want = oracle::forest_proba(model, m);
      for (std::size_t r = 0; r < n; ++r) CHECK(got[r].p == want[r]);
      check_prob_vectors(got, 3);
    }
  }

  TEST_CASE("fits are deterministic and independent of the thread count") {
    Rng rng(3);
    const auto m = random_matrix(rng, 150, 5, 20);
    const auto y = random_labels(rng, 150, 3);
    for (const char* name : {"rfc", "gbc", "xgbo"}) {
      auto spec = ModelSpec::from_name(name);
      spec.forest.n_trees = 20;
      spec.boost.n_rounds = 15;
      set_thread_count(1);
      const auto one = model_to_json(fit_model(spec, m, y, 3, 77)).dump();
      const auto again = model_to_json(fit_model(spec, m, y, 3, 77)).dump();
      set_thread_count(4);
      const auto four = model_to_json(fit_model(spec, m, y, 3, 77)).dump();
      set_thread_count(1);
      CHECK_MESSAGE(one == again, name);
      CHECK_MESSAGE(one == four, name);
    }
  }

  TEST_CASE("boost starts from the class frequencies") {
    Rng rng(4);
    const auto m = random_matrix(rng, 8, 2, 0);
    const std::vector<int> y = {0, 1, 1, 2, 1, 0, 1, 2};
    BoostParams params;
    params.n_rounds = 0;
    CHECK_THROWS_AS(fit_boost(m, y, 3, params), ConfigError);
    params.n_rounds = 1;
    const auto model = fit_boost(m, y, 3, params);
    REQUIRE(model.initial.size() == 3);
    CHECK(model.initial[0] == doctest::Approx(std::log(0.25)).epsilon(1e-12));
    CHECK(model.initial[1] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    const double entropy = -(0.5 * std::log(0.25) + 0.5 * std::log(0.5));
    CHECK(model.train_loss.front() == doctest::Approx(entropy).epsilon(1e-12));
  }

  TEST_CASE("boost reaches perfect training accuracy on separable data") {
    Rng rng(6);
    const auto m = random_matrix(rng, 200, 2, 0);
    const auto y = separable_labels(m);
    BoostParams params;
    params.n_rounds = 50;
    for (double l2 : {0.0, 1.0}) {
      params.l2 = l2;
      const auto model = fit_boost(m, y, 2, params);
      const auto probs = predict_proba(model, m);
      CHECK(train_accuracy(probs, y) == 1.0);
      check_prob_vectors(probs, 2);
      for (std::size_t r = 1; r < model.train_loss.size(); ++r) CHECK(model.train_loss[r] <= model.train_loss[r - 1]);
    }
  }

  TEST_CASE("boost rejects single-class labels") {
    const auto m = dense_matrix(3, 1, {1, 2, 3});
    CHECK_THROWS_AS(fit_boost(m, std::vector<int>{1, 1, 1}, 3, BoostParams{}), PreconditionError);
    CHECK_THROWS_AS(fit_boost(m, std::vector<int>{0, 1, 0}, 1, BoostParams{}), PreconditionError);
  }

  TEST_CASE("log-loss helper") {
    const std::vector<double> scores = {0.0, 0.0, 0.0, 0.0};
    CHECK(multinomial_log_loss(scores, std::vector<int>{0, 1}, 2) == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("ordinal combination rule") {
    auto c = [](double a, double b) { return combine_ordinal(std::vector<double>{a, b}).p; };
    const auto p1 = c(0.8, 0.3);
    CHECK(p1[0] == doctest::Approx(0.2));
    CHECK(p1[1] == doctest::Approx(0.5));
    CHECK(p1[2] == doctest::Approx(0.3));
    const auto p2 = c(0.4, 0.6);
    CHECK(p2[0] == doctest::Approx(0.5));
    CHECK(p2[1] == 0.0);
    CHECK(p2[2] == doctest::Approx(0.5));
    CHECK(c(1.0, 1.0) == std::vector<double>{0, 0, 1});

    // Continuity away from the clamp boundary a = b.
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
      const double a = rng.uniform(), b = rng.uniform();
      if (std::abs(a - b) < 1e-3) continue;
      const auto base = c(a, b);
      const auto near = c(a + 1e-9, b - 1e-9);
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(base[k] - near[k]) < 1e-6);
        s += base[k];
      }
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }

  TEST_CASE("ordinal fitting") {
    Rng rng(9);
    const auto m = random_matrix(rng, 90, 3, 0);
    std::vector<int> y(90);
    for (std::size_t i = 0; i < 90; ++i) y[i] = static_cast<int>(i % 3);
    auto spec = ModelSpec::from_name("rfco");
    spec.forest.n_trees = 10;
    const auto model = fit_ordinal(spec, m, y, 3, 1);
    CHECK(model.tasks.size() == 2);
    check_prob_vectors(predict_proba(model, m), 3);

    std::vector<int> high_only(90);
    for (std::size_t i = 0; i < 90; ++i) high_only[i] = 1 + static_cast<int>(i % 2);
    try {
      fit_ordinal(spec, m, high_only, 3, 1);
      FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
      CHECK(std::string(e.what()).find("task 1") != std::string::npos);
    }
  }

  TEST_CASE("baseline predicts the modal class with lower-class ties") {
    const auto m = dense_matrix(3, 1, {0, 0, 0});
    const auto b = baseline_modal(std::vector<int>{1, 1, 2}, 3);
    CHECK(b.modal == 1);
    CHECK(baseline_modal(std::vector<int>{1, 2}, 3).modal == 1);
    const auto probs = predict_proba(b, m);
    for (const auto& pv : probs) CHECK(pv.predicted() == 1);
    CHECK(train_accuracy(probs, {1, 1, 2}) == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("column mismatch is rejected") {
    Rng rng(10);
    const auto m = random_matrix(rng, 30, 3, 0);
    const auto y = random_labels(rng, 30, 2);
    const auto model = fit_model(ModelSpec::from_name("gbc"), m, y, 2, 1);
    const auto narrow = random_matrix(rng, 5, 2, 0);
    CHECK_THROWS_AS(predict_proba(model, narrow), PreconditionError);
  }

  TEST_CASE("held-out accuracy on separable two-feature data exceeds 95 percent") {
    Rng rng(12);
    const auto m = random_matrix(rng, 500, 2, 0);
    const auto y = separable_labels(m);
    const auto [train, test] = halves(m);
    const std::vector<int> ytrain(y.begin(), y.begin() + 250), ytest(y.begin() + 250, y.end());
    for (const char* name : {"rfc", "gbc", "xgb"}) {
      const auto model = fit_model(ModelSpec::from_name(name), train, ytrain, 2, 3);
      CHECK_MESSAGE(train_accuracy(predict_proba(model, test), ytest) > 0.95, name);
    }
  }

  TEST_CASE("ordinal and standard variants agree on separable data") {
    Rng rng(14);
    const auto m = random_matrix(rng, 600, 2, 0);
    std::vector<int> y(600);
    for (std::size_t r = 0; r < 600; ++r) {
      const double s = m.value(r, 0);
      y[r] = s < -0.4 ? 0 : s < 0.4 ? 1 : 2;
    }
    const auto [train, test] = halves(m);
    const std::vector<int> ytrain(y.begin(), y.begin() + 300);
    for (const char* base : {"rfc", "gbc"}) {
      const auto plain = predict_proba(fit_model(ModelSpec::from_name(base), train, ytrain, 3, 1), test);
      const auto ord = predict_proba(fit_model(ModelSpec::from_name(std::string(base) + "o"), train, ytrain, 3, 1), test);
      std::size_t agree = 0;
      for (std::size_t r = 0; r < test.rows(); ++r) agree += plain[r].predicted() == ord[r].predicted() ? 1 : 0;
      CHECK_MESSAGE(static_cast<double>(agree) / static_cast<double>(test.rows()) >= 0.95, base);
    }
  }

  TEST_CASE("model names and parameter resolution") {
    for (const char* name : {"rfc", "rfco", "gbc", "gbco", "xgb", "xgbo", "baseline"})
      CHECK(ModelSpec::from_name(name).name() == name);
    CHECK_THROWS_AS(ModelSpec::from_name("svm"), ConfigError);
    CHECK(ModelSpec::from_name("xgb").effective_boost().l2 == 1.0);
    auto gbc = ModelSpec::from_name("gbc");
    gbc.boost.l2 = 3.0;
    CHECK(gbc.effective_boost().l2 == 0.0);
  }

  TEST_CASE("model JSON round trip reproduces predictions") {
    Rng rng(15);
    const auto m = random_matrix(rng, 120, 4, 12);
    const auto y = random_labels(rng, 120, 3);
    for (const char* name : {"baseline", "rfc", "rfco", "gbc", "xgbo"}) {
      auto spec = ModelSpec::from_name(name);
      spec.forest.n_trees = 8;
      spec.boost.n_rounds = 10;
      const auto model = fit_model(spec, m, y, 3, 2);
      const auto json = model_to_json(model);
      CHECK(json.at("format_version") == kModelFormatVersion);
      const auto restored = model_from_json(nlohmann::json::parse(json.dump()));
      const auto a = predict_proba(model, m);
      const auto b = predict_proba(restored, m);
      for (std::size_t r = 0; r < m.rows(); ++r) CHECK_MESSAGE(a[r].p == b[r].p, name);
    }
    auto bad = model_to_json(fit_model(ModelSpec::from_name("baseline"), m, y, 3, 1));
    bad["format_version"] = 99;
    CHECK_THROWS(model_from_json(bad));
  }
}
