#include "refscore/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "refscore/errors.hpp"
#include "refscore/rng.hpp"

namespace refscore {

namespace {

std::vector<int> labels_of(const Corpus& corpus, const LabelScheme& scheme) {
  std::vector<int> labels;
  labels.reserve(corpus.size());
  for (const auto& a : corpus) {
    if (!a.score || *a.score < 1)
      throw PreconditionError(fmt::format("article '{}' has no usable score; every article needs a label", a.id));
    labels.push_back(scheme.class_of(*a.score));
  }
  return labels;
}

}  // namespace

Experiment::Experiment(Corpus corpus, LabelScheme scheme, FeatureConfig features)
    : corpus_(std::move(corpus)),
      scheme_(scheme),
      labels_(labels_of(corpus_, scheme_)),
      featurizer_(corpus_, features) {}

FeatureMatrix Experiment::matrix_for(std::span<const std::size_t> train_rows) const {
  const auto fitted = featurizer_.fit(corpus_, train_rows, labels_, n_classes());
  return featurizer_.build(corpus_, fitted);
}

void SplitPlan::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie strictly between 0 and 1");
  if (n_iterations == 0) throw ConfigError("n_iterations must be at least 1");
}

std::string_view to_string(Provenance p) { return p == Provenance::human ? "human" : "ai"; }

Range summarize(std::span<const double> values) {
  if (values.empty()) return {};
  Range r{0.0, values.front(), values.front()};
  for (double v : values) {
    r.mean += v;
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
  r.mean /= static_cast<double>(values.size());
  return r;
}

std::vector<CurvePoint> prob_accuracy_curve(std::span<const ScoredPrediction> predictions) {
  std::vector<const ScoredPrediction*> order;
  order.reserve(predictions.size());
  for (const auto& p : predictions) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const ScoredPrediction* a, const ScoredPrediction* b) {
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    return a->id < b->id;
  });
  std::vector<CurvePoint> curve;
  curve.reserve(order.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i]->correct) ++correct;
    curve.push_back({i + 1, static_cast<double>(correct) / static_cast<double>(i + 1)});
  }
  return curve;
}

std::size_t count_at_threshold(std::span<const CurvePoint> curve, double threshold) {
  for (std::size_t i = curve.size(); i > 0; --i)
    if (curve[i - 1].accuracy >= threshold) return curve[i - 1].n;
  return 0;
}

namespace {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  bool resampled = false;
};

std::set<int> classes_in(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::set<int> out;
  for (std::size_t r : rows) out.insert(labels[r]);
  return out;
}

// Uniform random split of `candidates` at `fraction`. A training set missing
// one of the candidates' classes is redrawn once; a second failure is fatal.
Split draw_split(std::span<const std::size_t> candidates, std::span<const int> labels, double fraction,
                 std::uint64_t seed) {
  const std::size_t n = candidates.size();
  if (n < 2) throw PreconditionError("at least two articles are needed to split into training and test sets");
  auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  const auto wanted = classes_in(labels, candidates);

  Rng rng(seed);
  Split split;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<std::size_t> pool(candidates.begin(), candidates.end());
    rng.shuffle(pool);
    split.train.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_train), pool.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    if (classes_in(labels, split.train) == wanted) return split;
    split.resampled = true;
  }
  throw PreconditionError(
      fmt::format("a class was missing from the training split twice (seed {}); use a larger training fraction", seed));
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

std::vector<int> pick(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

double share_equal(std::span<const int> labels, std::span<const std::size_t> rows, int value) {
  if (rows.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r : rows) hits += labels[r] == value ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

struct Fitted {
  Model model;
  FeatureMatrix matrix;  // every corpus row
  int modal = 0;
};

Fitted train(const Experiment& ex, const ModelSpec& spec, std::span<const std::size_t> rows, std::uint64_t seed,
             const FeatureMatrix* fixed_matrix = nullptr) {
  FeatureMatrix matrix = fixed_matrix ? *fixed_matrix : ex.matrix_for(rows);
  const auto y = pick(ex.labels(), rows);
  auto model = fit_model(spec, matrix.subset(rows), y, ex.n_classes(), seed);
  const int modal = baseline_modal(y, ex.n_classes()).modal;
  return {std::move(model), std::move(matrix), modal};
}

std::vector<ProbVector> predict_rows(const Fitted& f, std::span<const std::size_t> rows) {
  return predict_proba(f.model, f.matrix.subset(rows));
}

IterationOutcome base_outcome(const Experiment& ex, const ModelSpec& spec, std::size_t iteration, std::uint64_t seed) {
  IterationOutcome out;
  out.model_id = fmt::format("{}-{:02}", spec.name(), iteration);
  out.seed = seed;
  out.articles.resize(ex.size());
  for (std::size_t r = 0; r < ex.size(); ++r) out.articles[r].final_class = ex.labels()[r];
  return out;
}

void count_provenance(IterationOutcome& out) {
  out.n_human = 0;
  out.n_ai = 0;
  for (const auto& a : out.articles) (a.provenance == Provenance::ai ? out.n_ai : out.n_human)++;
}

// Fits on the training rows and records model output for every test row;
// provenance is left human for the caller to assign.
std::vector<ProbVector> predict_split(const Experiment& ex, const ModelSpec& spec, const Split& split,
                                      IterationOutcome& out) {
  const auto fitted = train(ex, spec, split.train, derive_seed(out.seed, 1));
  const auto probs = predict_rows(fitted, split.test);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    auto& a = out.articles[split.test[i]];
    a.model_class = probs[i].predicted();
    a.confidence = probs[i].confidence();
    if (*a.model_class == ex.labels()[split.test[i]]) ++correct;
  }
  out.resampled = split.resampled;
  out.n_train = split.train.size();
  out.test_accuracy = static_cast<double>(correct) / static_cast<double>(split.test.size());
  out.test_baseline = share_equal(ex.labels(), split.test, fitted.modal);
  return probs;
}

void assign_ai(IterationOutcome& out, std::span<const std::size_t> rows, const std::vector<int>& labels) {
  std::size_t correct = 0;
  for (std::size_t r : rows) {
    auto& a = out.articles[r];
    a.provenance = Provenance::ai;
    a.final_class = *a.model_class;
    if (a.final_class == labels[r]) ++correct;
  }
  if (!rows.empty()) out.ai_accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
}

void aggregate(StrategyOutcome& outcome) {
  std::vector<double> acc, base;
  for (const auto& it : outcome.iterations) {
    if (it.ai_accuracy) acc.push_back(*it.ai_accuracy);
    base.push_back(it.test_baseline);
  }
  outcome.accuracy = summarize(acc);
  outcome.baseline = summarize(base);
}

}  // namespace

StrategyOutcome run_strategy1(const Experiment& experiment, const ModelSpec& spec, const SplitPlan& plan) {
  plan.validate();
  spec.validate();
  StrategyOutcome outcome;
  outcome.strategy = "strategy1";
  const auto rows = all_rows(experiment.size());
  for (std::size_t i = 0; i < plan.n_iterations; ++i) {
    const std::uint64_t seed = derive_seed(plan.seed, i);
    auto out = base_outcome(experiment, spec, i, seed);
    const auto split = draw_split(rows, experiment.labels(), plan.train_fraction, seed);
    predict_split(experiment, spec, split, out);
    assign_ai(out, split.test, experiment.labels());
    count_provenance(out);
    outcome.iterations.push_back(std::move(out));
  }
  aggregate(outcome);
  return outcome;
}

StrategyOutcome run_strategy2(const Experiment& experiment, const ModelSpec& spec, const SplitPlan& plan,
                              double threshold) {
  plan.validate();
  spec.validate();
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("the accuracy threshold must lie in (0, 1]");
  StrategyOutcome outcome;
  outcome.strategy = "strategy2";
  const auto rows = all_rows(experiment.size());
  const auto& labels = experiment.labels();
  for (std::size_t i = 0; i < plan.n_iterations; ++i) {
    const std::uint64_t seed = derive_seed(plan.seed, i);
    auto out = base_outcome(experiment, spec, i, seed);
    const auto split = draw_split(rows, labels, plan.train_fraction, seed);
    predict_split(experiment, spec, split, out);

    std::vector<ScoredPrediction> scored;
    scored.reserve(split.test.size());
    std::size_t deploy_correct = 0;
    for (std::size_t r : split.test) {
      const auto& a = out.articles[r];
      const bool correct = *a.model_class == labels[r];
      scored.push_back({experiment.corpus()[r].id, a.confidence, correct});
      if (a.confidence >= threshold) {
        ++out.deployment_n_ai;
        deploy_correct += correct ? 1 : 0;
      }
    }
    if (out.deployment_n_ai > 0)
      out.deployment_accuracy = static_cast<double>(deploy_correct) / static_cast<double>(out.deployment_n_ai);
    out.curve = prob_accuracy_curve(scored);
    const std::size_t n_ai = count_at_threshold(out.curve, threshold);

    // The curve's first n_ai entries, recovered in the same order.
    std::vector<std::size_t> order = split.test;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ca = out.articles[a].confidence, cb = out.articles[b].confidence;
      if (ca != cb) return ca > cb;
      return experiment.corpus()[a].id < experiment.corpus()[b].id;
    });
    order.resize(n_ai);
    std::sort(order.begin(), order.end());
    assign_ai(out, order, labels);
    count_provenance(out);
    outcome.iterations.push_back(std::move(out));
  }
  aggregate(outcome);
  return outcome;
}

void ALConfig::validate() const {
  if (!(batch_fraction > 0.0 && batch_fraction <= 0.5)) throw ConfigError("batch_fraction must lie in (0, 0.5]");
  if (!(accuracy_threshold > 0.5 && accuracy_threshold <= 1.0))
    throw ConfigError("accuracy_threshold must lie in (0.5, 1]");
  if (max_batches == 0) throw ConfigError("max_batches must be at least 1");
}

ActiveLearningResult run_active_learning(const Experiment& experiment, const ModelSpec& spec,
                                         const ALConfig& config, const SplitPlan& plan) {
  config.validate();
  spec.validate();
  if (plan.n_iterations == 0) throw ConfigError("n_iterations must be at least 1");
  const std::size_t n = experiment.size();
  const auto& labels = experiment.labels();
  const auto& corpus = experiment.corpus();
  auto target = [&](std::size_t round) {
    const auto size = static_cast<std::size_t>(
        std::llround(static_cast<double>(round + 1) * config.batch_fraction * static_cast<double>(n)));
    return std::min(size, n);
  };

  ActiveLearningResult result;
  result.outcome.strategy = "active_learning";
  const auto rows = all_rows(n);
  for (std::size_t i = 0; i < plan.n_iterations; ++i) {
    const std::uint64_t seed = derive_seed(plan.seed, i);
    auto out = base_outcome(experiment, spec, i, seed);
    ALTrace trace;

    const double first = static_cast<double>(target(0)) / static_cast<double>(n);
    const auto initial = draw_split(rows, labels, first, seed);
    std::vector<std::size_t> labeled = initial.train;
    std::vector<std::size_t> remainder = initial.test;
    out.resampled = initial.resampled;
    std::optional<FeatureMatrix> fixed;
    std::vector<std::string> batch_ids;
    for (std::size_t r : labeled) batch_ids.push_back(corpus[r].id);

    std::vector<ProbVector> probs;
    int modal = 0;
    for (std::size_t round = 0;; ++round) {
      ALRound step;
      step.labeled = labeled.size();
      step.selected_ids = std::move(batch_ids);
      batch_ids.clear();
      if (remainder.empty()) {
        step.stop = true;
        trace.rounds.push_back(std::move(step));
        probs.clear();
        break;
      }
      if (!config.refresh_features && !fixed) fixed = experiment.matrix_for(labeled);
      const auto fitted =
          train(experiment, spec, labeled, derive_seed(seed, 100 + round), fixed ? &*fixed : nullptr);
      modal = fitted.modal;
      probs = predict_rows(fitted, remainder);
      std::size_t correct = 0;
      double conf_sum = 0.0;
      for (std::size_t k = 0; k < remainder.size(); ++k) {
        correct += probs[k].predicted() == labels[remainder[k]] ? 1 : 0;
        conf_sum += probs[k].confidence();
      }
      const double realized = static_cast<double>(correct) / static_cast<double>(remainder.size());
      step.estimated_accuracy = conf_sum / static_cast<double>(remainder.size());
      step.realized_accuracy = realized;
      if (realized >= config.accuracy_threshold) {
        step.stop = true;
        trace.stopped_early = true;
      } else if (round + 1 >= config.max_batches) {
        step.stop = true;
      }
      if (step.stop) {
        trace.rounds.push_back(std::move(step));
        break;
      }

      // Next batch: least confident first, ties by article id.
      std::vector<std::size_t> order(remainder.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ca = probs[a].confidence(), cb = probs[b].confidence();
        if (ca != cb) return ca < cb;
        return corpus[remainder[a]].id < corpus[remainder[b]].id;
      });
      const std::size_t take = std::min(target(round + 1) - labeled.size(), remainder.size());
      std::vector<char> chosen(remainder.size(), 0);
      for (std::size_t k = 0; k < take; ++k) chosen[order[k]] = 1;
      std::vector<std::size_t> still;
      for (std::size_t k = 0; k < remainder.size(); ++k) {
        if (chosen[k]) {
          labeled.push_back(remainder[k]);
        } else {
          still.push_back(remainder[k]);
        }
      }
      for (std::size_t k = 0; k < take; ++k) batch_ids.push_back(corpus[remainder[order[k]]].id);
      std::sort(labeled.begin(), labeled.end());
      remainder = std::move(still);
      trace.rounds.push_back(std::move(step));
    }

    // Model output on the final remainder is kept for reference; it only
    // becomes the final score when the threshold was met.
    std::size_t correct = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      auto& a = out.articles[remainder[k]];
      a.model_class = probs[k].predicted();
      a.confidence = probs[k].confidence();
      correct += *a.model_class == labels[remainder[k]] ? 1 : 0;
    }
    out.n_train = labeled.size();
    out.test_accuracy = remainder.empty() ? 1.0 : static_cast<double>(correct) / static_cast<double>(remainder.size());
    out.test_baseline = share_equal(labels, remainder, modal);
    if (trace.stopped_early) {
      assign_ai(out, remainder, labels);
    } else {
      out.ai_accuracy = 1.0;  // humans scored everything
    }
    trace.final_labeled = trace.stopped_early ? labeled.size() : n;
    count_provenance(out);
    result.traces.push_back(std::move(trace));
    result.outcome.iterations.push_back(std::move(out));
  }
  aggregate(result.outcome);
  return result;
}

CrossYearResult cross_year(const Corpus& corpus, const LabelScheme& scheme, const FeatureConfig& features,
                           const ModelSpec& spec, int train_year, std::span<const int> test_years,
                           std::size_t n_iterations, std::uint64_t seed) {
  spec.validate();
  if (n_iterations == 0) throw ConfigError("n_iterations must be at least 1");
  CrossYearResult result;
  result.train_year = train_year;

  std::set<int> years(test_years.begin(), test_years.end());
  years.erase(train_year);
  Corpus combined;
  for (const auto& a : corpus)
    if (a.year == train_year) combined.push_back(a);
  if (combined.empty()) throw PreconditionError(fmt::format("no articles from training year {}", train_year));
  const std::size_t n_train_year = combined.size();
  std::map<int, std::vector<std::size_t>> rows_by_year;
  for (int y : years) {
    for (const auto& a : corpus) {
      if (a.year != y) continue;
      rows_by_year[y].push_back(combined.size());
      combined.push_back(a);
    }
    if (!rows_by_year.contains(y)) result.skipped_years.push_back(y);
  }

  const Experiment ex(std::move(combined), scheme, features);
  const auto train_rows = all_rows(n_train_year);
  std::map<int, std::vector<double>> acc;
  auto score = [&](const Fitted& fitted, std::span<const std::size_t> rows) {
    const auto probs = predict_rows(fitted, rows);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) correct += probs[k].predicted() == ex.labels()[rows[k]] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(rows.size());
  };
  for (std::size_t i = 0; i < n_iterations; ++i) {
    const std::uint64_t s = derive_seed(seed, i);
    const auto split = draw_split(train_rows, ex.labels(), 0.5, s);
    const auto fitted = train(ex, spec, split.train, derive_seed(s, 1));
    acc[train_year].push_back(score(fitted, split.test));
    for (const auto& [y, rows] : rows_by_year) acc[y].push_back(score(fitted, rows));
  }
  for (const auto& [y, values] : acc) result.accuracy_by_year[y] = summarize(values);
  return result;
}

}  // namespace refscore
