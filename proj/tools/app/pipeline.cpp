#include "pipeline.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "refscore/evaluation.hpp"
#include "refscore/features.hpp"
#include "refscore/rng.hpp"
#include "refscore/strategies.hpp"
#include "refscore/synthetic.hpp"
#include "svg.hpp"

namespace refscore::app {

namespace {

using ojson = nlohmann::ordered_json;

std::string num(double v) { return fmt::format("{}", v); }

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson stat_json(double mean, double min, double max) { return {{"mean", mean}, {"min", min}, {"max", max}}; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) { row_of(header); }

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> parts{cell(cells)...};
    std::string line;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) line.push_back(',');
      line += parts[i];
    }
    text_ += line + "\n";
  }

  const std::string& str() const { return text_; }

 private:
  void row_of(std::initializer_list<std::string_view> cells) {
    bool first = true;
    for (auto c : cells) {
      if (!first) text_.push_back(',');
      text_ += c;
      first = false;
    }
    text_.push_back('\n');
  }
  static std::string cell(const std::string& s) { return csv_field(s); }
  static std::string cell(const char* s) { return csv_field(s); }
  static std::string cell(std::string_view s) { return csv_field(std::string(s)); }
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::optional<double>& v) { return num(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return fmt::format("{}", v);
  }

  std::string text_;
};

std::string uoa_tag(int uoa) { return fmt::format("uoa{:02}", uoa); }

// ---------------------------------------------------------------------------

struct Reports {
  Csv accuracy{"uoa", "iteration", "model_id", "resampled", "n_train", "n_human", "n_ai", "test_accuracy",
               "test_baseline", "above_baseline", "ai_accuracy", "deployment_n_ai", "deployment_accuracy"};
  Csv institutions{"uoa",       "institution",      "iterations",       "mean_articles",     "human_power",
                   "ai_power",  "gain_mean",        "gain_min",         "gain_max",          "overall_gain_eligible_mean",
                   "overall_gain_eligible_min", "overall_gain_eligible_max", "overall_gain_all_mean"};
  Csv subgroups{"uoa", "dimension", "group", "status", "articles", "gain_mean", "gain_min", "gain_max"};
  Csv ranks{"uoa",         "institution", "human_gpa",       "human_rank",      "ai_gpa_mean",
            "ai_gpa_min",  "ai_gpa_max",  "rank_delta_mean", "rank_delta_min", "rank_delta_max"};
  Csv correlations{"uoa", "mode", "defined_iterations", "mean", "min", "max"};
  Csv curves{"uoa", "iteration", "n", "accuracy"};
  Csv al_trace{"uoa", "iteration", "round", "labeled", "labeled_fraction", "n_selected", "estimated_accuracy",
               "realized_accuracy", "stop"};
  Csv cross_years{"uoa", "train_year", "year", "status", "mean", "min", "max"};
  Csv half_sample{"uoa", "institution", "n_articles", "true_power", "estimate_mean", "estimate_min", "estimate_max"};
  bool has_institutions = false, has_curves = false, has_trace = false, has_cross = false, has_half = false;
  std::vector<std::pair<std::string, std::string>> svgs;
};

int star_of(const LabelScheme& scheme, int cls) { return scheme.representative_score(cls); }

struct Subgroup {
  std::string dimension;
  std::vector<std::string> groups;
  std::optional<std::string> (*label)(const ArticleRecord&);
};

const std::vector<Subgroup>& subgroup_dimensions() {
  static const std::vector<Subgroup> dims = {
      {"career",
       {"ecr", "experienced"},
       [](const ArticleRecord& a) -> std::optional<std::string> {
         if (!a.ecr) return std::nullopt;
         return *a.ecr ? "ecr" : "experienced";
       }},
      {"gender",
       {"F", "M"},
       [](const ArticleRecord& a) -> std::optional<std::string> {
         if (!a.gender_label || *a.gender_label == Gender::unknown) return std::nullopt;
         return *a.gender_label == Gender::female ? "F" : "M";
       }},
      {"interdisciplinary",
       {"interdisciplinary", "single"},
       [](const ArticleRecord& a) -> std::optional<std::string> {
         if (!a.interdisciplinary) return std::nullopt;
         return *a.interdisciplinary ? "interdisciplinary" : "single";
       }},
  };
  return dims;
}

// Evaluation battery over the per-iteration outcomes of one UoA.
ojson evaluate_uoa(int uoa, const Corpus& corpus, const Corpus& all_analysed, const LabelScheme& scheme,
                   const StrategyOutcome& outcome, double eligible_share, Reports& reports) {
  const std::size_t n = corpus.size();
  ojson summary;

  std::vector<std::vector<InstitutionArticle>> shift_input;
  std::vector<double> fractions;
  std::vector<std::map<std::string, int>> substitutions;
  std::map<std::string, std::vector<std::optional<double>>> corr;
  std::vector<std::vector<std::vector<SubgroupArticle>>> subgroup_input(subgroup_dimensions().size());
  std::vector<double> ai_fraction;

  for (const auto& it : outcome.iterations) {
    std::vector<InstitutionArticle> ai_articles;
    std::map<std::string, int> subs;
    std::vector<UoaInstitutionScore> blended;
    std::vector<std::vector<SubgroupArticle>> groups(subgroup_dimensions().size());
    for (std::size_t r = 0; r < n; ++r) {
      const auto& a = corpus[r];
      const auto& p = it.articles[r];
      const int human = *a.score;
      const bool ai = p.provenance == Provenance::ai;
      const int predicted = ai ? star_of(scheme, p.final_class) : human;
      blended.push_back({uoa, a.institution, human, predicted});
      if (!ai) continue;
      ai_articles.push_back({a.institution, human, predicted});
      subs[a.id] = predicted;
      for (std::size_t d = 0; d < subgroup_dimensions().size(); ++d)
        groups[d].push_back({subgroup_dimensions()[d].label(a), human, predicted});
    }
    fractions.push_back(static_cast<double>(it.n_ai) / static_cast<double>(n));
    ai_fraction.push_back(fractions.back());
    shift_input.push_back(std::move(ai_articles));
    substitutions.push_back(std::move(subs));
    corr["average"].push_back(institution_correlations(blended, CorrelationMode::average).at(uoa));
    corr["total"].push_back(institution_correlations(blended, CorrelationMode::total).at(uoa));
    for (std::size_t d = 0; d < groups.size(); ++d) subgroup_input[d].push_back(std::move(groups[d]));
  }
  const auto fraction_stat = stat_of(ai_fraction);
  summary["ai_fraction"] = stat_json(fraction_stat.mean, fraction_stat.min, fraction_stat.max);

  std::vector<std::string> roster;
  for (const auto& a : corpus) roster.push_back(a.institution);
  std::sort(roster.begin(), roster.end());
  roster.erase(std::unique(roster.begin(), roster.end()), roster.end());

  const auto shift = institutional_shift(shift_input, fractions, roster);
  reports.has_institutions = true;
  std::vector<Bar> bars;
  for (const auto& s : shift.institutions) {
    reports.institutions.row(uoa, s.institution, s.iterations, s.mean_articles, s.human_power, s.ai_power,
                             s.gain.mean, s.gain.min, s.gain.max, s.overall_gain.mean, s.overall_gain.min,
                             s.overall_gain.max, s.overall_gain.mean * eligible_share);
    bars.push_back({s.institution, s.gain.mean, s.gain.min, s.gain.max});
  }
  summary["excluded_institutions"] = shift.excluded;
  summary["eligible_share"] = eligible_share;
  if (!bars.empty())
    reports.svgs.emplace_back(fmt::format("institution_gain_{}.svg", uoa_tag(uoa)),
                              bar_chart_svg(fmt::format("UoA {}: institutional score gain (AI - human)", uoa),
                                            "gain (percentage points)", bars));

  ojson corr_json;
  for (const auto& [mode, values] : corr) {
    std::vector<double> defined;
    for (const auto& v : values)
      if (v) defined.push_back(*v);
    const auto st = stat_of(defined);
    if (defined.empty()) {
      reports.correlations.row(uoa, mode, defined.size(), "", "", "");
      corr_json[mode] = nullptr;
    } else {
      reports.correlations.row(uoa, mode, defined.size(), st.mean, st.min, st.max);
      corr_json[mode] = stat_json(st.mean, st.min, st.max);
    }
  }
  summary["institution_correlations"] = corr_json;

  std::vector<GpaOutput> outputs;
  for (const auto& a : corpus) outputs.push_back({a.id, a.institution, *a.score});
  const auto ranks = gpa_rank_shift(outputs, substitutions);
  for (const auto& r : ranks.institutions)
    reports.ranks.row(uoa, r.institution, r.human_gpa, r.human_rank, r.ai_gpa.mean, r.ai_gpa.min, r.ai_gpa.max,
                      r.rank_delta.mean, r.rank_delta.min, r.rank_delta.max);

  for (std::size_t d = 0; d < subgroup_dimensions().size(); ++d) {
    const auto& dim = subgroup_dimensions()[d];
    const auto report = subgroup_shift(subgroup_input[d], dim.groups);
    for (const auto& g : report.groups)
      reports.subgroups.row(uoa, dim.dimension, g.group, "ok", g.articles, g.gain.mean, g.gain.min, g.gain.max);
    for (const auto& g : report.empty_groups) reports.subgroups.row(uoa, dim.dimension, g, "empty", 0, "", "", "");
  }

  // Size and quality covariates of the institutional gain.
  std::map<std::string, std::size_t> inst_size;
  for (const auto& a : all_analysed) ++inst_size[a.institution];
  std::map<std::string, std::vector<int>> human_scores;
  for (const auto& a : corpus) human_scores[a.institution].push_back(*a.score);
  std::vector<double> gain, isize, ssize, power;
  for (const auto& s : shift.institutions) {
    gain.push_back(s.gain.mean);
    isize.push_back(static_cast<double>(inst_size[s.institution]));
    ssize.push_back(static_cast<double>(human_scores[s.institution].size()));
    power.push_back(research_power(human_scores[s.institution]));
  }
  const auto sq = size_quality_correlations(gain, isize, ssize, power);
  summary["size_quality_correlations"] = {{"institution_size", opt_json(sq.institution_size)},
                                          {"submission_size", opt_json(sq.submission_size)},
                                          {"mean_human_power", opt_json(sq.mean_power)}};
  return summary;
}

void add_accuracy_rows(int uoa, const StrategyOutcome& outcome, bool strategy2, Reports& reports) {
  std::vector<Bar> bars;
  for (std::size_t i = 0; i < outcome.iterations.size(); ++i) {
    const auto& it = outcome.iterations[i];
    reports.accuracy.row(uoa, i, it.model_id, it.resampled, it.n_train, it.n_human, it.n_ai, it.test_accuracy,
                         it.test_baseline, it.test_accuracy - it.test_baseline, it.ai_accuracy,
                         strategy2 ? fmt::format("{}", it.deployment_n_ai) : std::string(),
                         strategy2 ? num(it.deployment_accuracy) : std::string());
    bars.push_back({fmt::format("iteration {}", i), it.test_accuracy, it.test_accuracy, it.test_accuracy});
  }
  reports.svgs.emplace_back(fmt::format("accuracy_{}.svg", uoa_tag(uoa)),
                            bar_chart_svg(fmt::format("UoA {}: held-out accuracy per iteration", uoa), "accuracy", bars));
}

ojson outcome_json(const Corpus& corpus, const LabelScheme& scheme, const StrategyOutcome& outcome) {
  auto iterations = ojson::array();
  for (std::size_t i = 0; i < outcome.iterations.size(); ++i) {
    const auto& it = outcome.iterations[i];
    ojson articles = ojson::object();
    for (std::size_t r = 0; r < corpus.size(); ++r) {
      const auto& p = it.articles[r];
      const int pred = p.provenance == Provenance::ai ? star_of(scheme, p.final_class) : *corpus[r].score;
      articles[corpus[r].id] = {{"pred", pred}, {"conf", p.confidence}, {"provenance", to_string(p.provenance)}};
    }
    iterations.push_back({{"iteration", i},
                          {"model_id", it.model_id},
                          {"seed", it.seed},
                          {"resampled", it.resampled},
                          {"articles", std::move(articles)}});
  }
  return iterations;
}

ojson range_json(const Range& r) { return stat_json(r.mean, r.min, r.max); }

}  // namespace

// ---------------------------------------------------------------------------

Corpus load_source(const RunConfig& config) {
  if (config.synthetic) return in_stage("synth", [&] { return generate_synthetic(*config.synthetic, config.seed); });
  return in_stage("ingest", [&] { return ingest_corpus(*config.corpus_path, config.corpus_format); });
}

PreparedCorpus prepare_corpus(const RunConfig& config, bool dedup) {
  const Corpus raw = load_source(config);
  PreparedCorpus out;
  out.n_input = raw.size();
  for (const auto& a : raw) ++out.input_by_uoa[a.uoa];
  auto included = in_stage("filter", [&] { return apply_inclusion(raw, config.inclusion); });
  out.dropped = included.dropped;
  out.n_included = included.kept.size();
  for (const auto& a : included.kept) ++out.included_by_uoa[a.uoa];
  if (dedup) {
    out.corpus = in_stage("dedup", [&] { return dedup_within_uoa(included.kept, derive_seed(config.seed, 0xded)); });
  } else {
    out.corpus = std::move(included.kept);
  }
  if (!config.uoas.empty()) {
    const std::set<int> wanted(config.uoas.begin(), config.uoas.end());
    std::erase_if(out.corpus, [&](const ArticleRecord& a) { return !wanted.contains(a.uoa); });
  }
  return out;
}

std::string synth_jsonl(const SyntheticSpec& spec, std::uint64_t seed) {
  const auto corpus = in_stage("synth", [&] { return generate_synthetic(spec, seed); });
  std::ostringstream out;
  write_jsonl(out, corpus);
  return out.str();
}

namespace {

std::map<int, Corpus> split_by_uoa(const Corpus& corpus) {
  std::map<int, Corpus> out;
  for (const auto& a : corpus) out[a.uoa].push_back(a);
  return out;
}

ojson manifest_head(const RunConfig& config, std::string_view command) {
  const auto resolved = config.to_json();
  ojson head;
  head["tool"] = "refscore";
  head["version"] = kToolVersion;
  head["command"] = command;
  head["model_format_version"] = kModelFormatVersion;
  head["config_hash"] = sha256_hex(resolved.dump());
  head["seed"] = config.seed;
  head["config"] = resolved;
  return head;
}

ojson corpus_summary(const PreparedCorpus& prepared) {
  ojson dropped = ojson::object();
  for (const auto& [reason, count] : prepared.dropped) dropped[reason] = count;
  return {{"n_input", prepared.n_input},
          {"n_included", prepared.n_included},
          {"dropped", dropped},
          {"n_analysed", prepared.corpus.size()}};
}

}  // namespace

Bundle build_run_bundle(const RunConfig& config) {
  const auto prepared = prepare_corpus(config, config.dedup);
  if (prepared.corpus.empty()) throw DataError("[filter] no articles remain after filtering");
  const auto by_uoa = split_by_uoa(prepared.corpus);
  const auto& st = config.strategy;

  Reports reports;
  ojson uoa_summaries = ojson::array();
  ojson outcome_doc;
  outcome_doc["strategy"] = to_string(st.kind);
  outcome_doc["label_scheme"] = config.scheme.name();
  outcome_doc["uoas"] = ojson::array();

  for (const auto& [uoa, corpus] : by_uoa) {
    const std::string where = fmt::format("UoA {}", uoa);
    ojson summary;
    summary["uoa"] = uoa;
    summary["n_articles"] = corpus.size();
    ojson outcome_entry;
    outcome_entry["uoa"] = uoa;

    if (st.kind == StrategyKind::cross_year) {
      const auto result = in_stage(fmt::format("strategy {}", where), [&] {
        return cross_year(corpus, config.scheme, config.features, config.model, st.train_year, st.test_years,
                          st.plan.n_iterations, st.plan.seed);
      });
      reports.has_cross = true;
      ojson years = ojson::object();
      std::vector<Bar> bars;
      for (const auto& [year, r] : result.accuracy_by_year) {
        reports.cross_years.row(uoa, result.train_year, year, year == result.train_year ? "held_out" : "ok", r.mean,
                                r.min, r.max);
        years[std::to_string(year)] = range_json(r);
        bars.push_back({std::to_string(year), r.mean, r.min, r.max});
      }
      for (int year : result.skipped_years) reports.cross_years.row(uoa, result.train_year, year, "skipped", "", "", "");
      summary["train_year"] = result.train_year;
      summary["accuracy_by_year"] = years;
      summary["skipped_years"] = result.skipped_years;
      reports.svgs.emplace_back(
          fmt::format("cross_year_{}.svg", uoa_tag(uoa)),
          bar_chart_svg(fmt::format("UoA {}: accuracy by year, trained on {}", uoa, result.train_year), "accuracy", bars));
      uoa_summaries.push_back(std::move(summary));
      continue;
    }

    const Experiment experiment = in_stage(fmt::format("featurize {}", where), [&] {
      return Experiment(corpus, config.scheme, config.features);
    });

    StrategyOutcome outcome;
    std::vector<ALTrace> traces;
    in_stage(fmt::format("strategy {}", where), [&] {
      switch (st.kind) {
        case StrategyKind::strategy1:
          outcome = run_strategy1(experiment, config.model, st.plan);
          break;
        case StrategyKind::strategy2:
          outcome = run_strategy2(experiment, config.model, st.plan, st.threshold);
          break;
        case StrategyKind::active_learning: {
          auto result = run_active_learning(experiment, config.model, st.active, st.plan);
          outcome = std::move(result.outcome);
          traces = std::move(result.traces);
          break;
        }
        case StrategyKind::cross_year:
          break;
      }
    });

    const double eligible_share =
        static_cast<double>(prepared.included_by_uoa.at(uoa)) / static_cast<double>(prepared.input_by_uoa.at(uoa));
    in_stage(fmt::format("evaluation {}", where), [&] {
      add_accuracy_rows(uoa, outcome, st.kind == StrategyKind::strategy2, reports);
      summary["accuracy"] = range_json(outcome.accuracy);
      summary["baseline"] = range_json(outcome.baseline);
      std::vector<double> tests, above;
      for (const auto& it : outcome.iterations) {
        tests.push_back(it.test_accuracy);
        above.push_back(it.test_accuracy - it.test_baseline);
      }
      summary["test_accuracy"] = range_json(summarize(tests));
      summary["above_baseline"] = range_json(summarize(above));
      summary.update(evaluate_uoa(uoa, corpus, prepared.corpus, config.scheme, outcome, eligible_share, reports));

      if (st.kind == StrategyKind::strategy2) {
        reports.has_curves = true;
        std::vector<Series> series;
        std::vector<double> n_ai, deploy;
        for (std::size_t i = 0; i < outcome.iterations.size(); ++i) {
          const auto& it = outcome.iterations[i];
          Series s{fmt::format("iteration {}", i), {}};
          for (const auto& p : it.curve) {
            reports.curves.row(uoa, i, p.n, p.accuracy);
            s.points.emplace_back(static_cast<double>(p.n), p.accuracy);
          }
          series.push_back(std::move(s));
          n_ai.push_back(static_cast<double>(it.n_ai));
          deploy.push_back(static_cast<double>(it.deployment_n_ai));
        }
        summary["threshold"] = st.threshold;
        summary["ai_count"] = range_json(summarize(n_ai));
        summary["deployment_ai_count"] = range_json(summarize(deploy));
        reports.svgs.emplace_back(fmt::format("curves_{}.svg", uoa_tag(uoa)),
                                  line_chart_svg(fmt::format("UoA {}: cumulative accuracy by confidence rank", uoa),
                                                 "predictions (most confident first)", "cumulative accuracy", series));
      }

      if (st.kind == StrategyKind::active_learning) {
        reports.has_trace = true;
        std::vector<Series> series;
        std::size_t stopped = 0;
        std::vector<double> final_fraction;
        ojson trace_json = ojson::array();
        for (std::size_t i = 0; i < traces.size(); ++i) {
          const auto& t = traces[i];
          Series s{fmt::format("iteration {}", i), {}};
          ojson rounds = ojson::array();
          for (std::size_t r = 0; r < t.rounds.size(); ++r) {
            const auto& round = t.rounds[r];
            const double frac = static_cast<double>(round.labeled) / static_cast<double>(corpus.size());
            reports.al_trace.row(uoa, i, r, round.labeled, frac, round.selected_ids.size(), round.estimated_accuracy,
                                 round.realized_accuracy, round.stop);
            if (round.realized_accuracy) s.points.emplace_back(frac, *round.realized_accuracy);
            rounds.push_back({{"labeled", round.labeled},
                              {"estimated_accuracy", round.estimated_accuracy},
                              {"realized_accuracy", opt_json(round.realized_accuracy)},
                              {"stop", round.stop},
                              {"selected_ids", round.selected_ids}});
          }
          series.push_back(std::move(s));
          stopped += t.stopped_early ? 1 : 0;
          final_fraction.push_back(static_cast<double>(t.final_labeled) / static_cast<double>(corpus.size()));
          trace_json.push_back({{"iteration", i},
                                {"stopped_early", t.stopped_early},
                                {"final_labeled", t.final_labeled},
                                {"rounds", std::move(rounds)}});
        }
        outcome_entry["traces"] = std::move(trace_json);
        summary["stopped_early"] = stopped;
        summary["human_labeled_fraction"] = range_json(summarize(final_fraction));
        reports.svgs.emplace_back(fmt::format("al_trace_{}.svg", uoa_tag(uoa)),
                                  line_chart_svg(fmt::format("UoA {}: remainder accuracy by labeled fraction", uoa),
                                                 "labeled fraction", "remainder accuracy", series));
      }

      if (config.half_sample) {
        reports.has_half = true;
        const auto estimates = half_sample_doubling(corpus, config.half_sample->min_articles,
                                                    config.half_sample->iterations,
                                                    derive_seed(config.seed, 0x4a1f0000ULL + static_cast<std::uint64_t>(uoa)));
        for (const auto& e : estimates)
          reports.half_sample.row(uoa, e.institution, e.n_articles, e.true_power, e.estimate.mean, e.estimate.min,
                                  e.estimate.max);
      }
    });

    outcome_entry["iterations"] = outcome_json(corpus, config.scheme, outcome);
    outcome_doc["uoas"].push_back(std::move(outcome_entry));
    uoa_summaries.push_back(std::move(summary));
  }

  ojson summary;
  summary["tool"] = "refscore";
  summary["version"] = kToolVersion;
  summary["seed"] = config.seed;
  summary["config_hash"] = sha256_hex(config.to_json().dump());
  summary["strategy"] = to_string(st.kind);
  summary["model"] = config.model.name();
  summary["label_scheme"] = config.scheme.name();
  summary["input_set"] = static_cast<int>(config.features.input_set);
  summary["k_total"] = config.features.k_total;
  summary["iterations"] = st.plan.n_iterations;
  summary["corpus"] = corpus_summary(prepared);
  summary["uoas"] = std::move(uoa_summaries);

  Bundle bundle;
  bundle.add("summary.json", summary.dump(2) + "\n");
  if (st.kind != StrategyKind::cross_year) {
    bundle.add("accuracy.csv", reports.accuracy.str());
    bundle.add("institution_shift.csv", reports.institutions.str());
    bundle.add("subgroup_shift.csv", reports.subgroups.str());
    bundle.add("rank_shift.csv", reports.ranks.str());
    bundle.add("correlations.csv", reports.correlations.str());
    bundle.add("outcome.json", outcome_doc.dump(1) + "\n");
  }
  if (reports.has_curves) bundle.add("curves.csv", reports.curves.str());
  if (reports.has_trace) bundle.add("al_trace.csv", reports.al_trace.str());
  if (reports.has_cross) bundle.add("cross_year.csv", reports.cross_years.str());
  if (reports.has_half) bundle.add("half_sample.csv", reports.half_sample.str());
  for (auto& [name, svg] : reports.svgs) bundle.add(name, std::move(svg));
  bundle.seal(manifest_head(config, "run"));
  return bundle;
}

Bundle build_terms_bundle(const RunConfig& config) {
  const auto prepared = prepare_corpus(config, config.dedup);
  Csv terms{"uoa", "class", "rank", "kind", "token", "chi2"};
  for (const auto& [uoa, corpus] : split_by_uoa(prepared.corpus)) {
    in_stage(fmt::format("terms UoA {}", uoa), [&] {
      std::vector<int> labels;
      for (const auto& a : corpus) {
        if (!a.score || *a.score < 1)
          throw PreconditionError(fmt::format("article '{}' is unlabeled; term association needs scores", a.id));
        labels.push_back(config.scheme.class_of(*a.score));
      }
      const TermIndex index(corpus);
      std::vector<std::size_t> rows(corpus.size());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      int last_class = -1;
      std::size_t rank = 0;
      for (const auto& t :
           term_association_report(index, rows, labels, config.scheme.n_classes(), config.terms_top_n)) {
        rank = t.cls == last_class ? rank + 1 : 1;
        last_class = t.cls;
        terms.row(uoa, config.scheme.class_name(t.cls), rank, to_string(t.term.kind), t.term.text, t.chi2);
      }
    });
  }
  Bundle bundle;
  bundle.add("terms.csv", terms.str());
  bundle.seal(manifest_head(config, "terms"));
  return bundle;
}

Bundle build_agreement_bundle(const RunConfig& config) {
  const auto prepared = prepare_corpus(config, false);
  Csv table{"scope", "group_size", "pairs", "agreeing", "rate"};
  ojson doc;
  doc["corpus"] = corpus_summary(prepared);
  for (auto scope : {AgreementScope::within_uoa, AgreementScope::between_uoa}) {
    const auto report = in_stage("agreement", [&] { return agreement_stats(prepared.corpus, scope); });
    const std::string name = scope == AgreementScope::within_uoa ? "within_uoa" : "between_uoa";
    ojson j;
    j["n_groups"] = report.n_groups;
    j["n_pairs"] = report.n_pairs;
    j["n_agreeing"] = report.n_agreeing;
    j["n_agreeing_merged"] = report.n_agreeing_merged;
    j["agreement"] = opt_json(report.agreement);
    j["agreement_merged_1_2"] = opt_json(report.agreement_merged);
    j["undefined"] = report.undefined();
    ojson per_uoa = ojson::object();
    for (const auto& [uoa, rate] : report.per_uoa) per_uoa[std::to_string(uoa)] = rate;
    if (scope == AgreementScope::within_uoa) j["per_uoa"] = per_uoa;
    ojson sizes = ojson::object();
    for (const auto& [size, g] : report.by_group_size) {
      sizes[std::to_string(size)] = {{"pairs", g.pairs}, {"agreeing", g.agreeing}, {"rate", g.rate()}};
      table.row(name, size, g.pairs, g.agreeing, g.rate());
    }
    j["by_group_size"] = sizes;
    if (scope == AgreementScope::between_uoa) j["extrapolated_single"] = opt_json(report.extrapolated_single);
    doc[name] = std::move(j);
  }
  Bundle bundle;
  bundle.add("agreement.json", doc.dump(2) + "\n");
  bundle.add("agreement.csv", table.str());
  bundle.seal(manifest_head(config, "agreement"));
  return bundle;
}

Bundle build_homogeneity_bundle(const RunConfig& config) {
  const auto prepared = prepare_corpus(config, config.dedup);
  const auto report = in_stage("homogeneity", [&] { return journal_homogeneity(prepared.corpus); });
  ojson doc;
  doc["corpus"] = corpus_summary(prepared);
  doc["n_pairs"] = report.n_pairs;
  doc["overall"] = opt_json(report.overall);
  ojson per_uoa = ojson::object();
  Csv table{"uoa", "homogeneity"};
  for (const auto& [uoa, v] : report.per_uoa) {
    per_uoa[std::to_string(uoa)] = opt_json(v);
    table.row(uoa, v);
  }
  doc["per_uoa"] = per_uoa;
  Bundle bundle;
  bundle.add("homogeneity.json", doc.dump(2) + "\n");
  bundle.add("homogeneity.csv", table.str());
  bundle.seal(manifest_head(config, "homogeneity"));
  return bundle;
}

}  // namespace refscore::app
