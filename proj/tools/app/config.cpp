#include "config.hpp"

#include <fstream>

#include <fmt/format.h>

#include "refscore/errors.hpp"
#include "refscore/json_reader.hpp"

namespace refscore::app {

std::string_view to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::strategy1:
      return "strategy1";
    case StrategyKind::strategy2:
      return "strategy2";
    case StrategyKind::active_learning:
      return "active_learning";
    case StrategyKind::cross_year:
      return "cross_year";
  }
  return "strategy1";
}

namespace {

StrategyKind strategy_from(const std::string& name, const std::string& path) {
  if (name == "strategy1") return StrategyKind::strategy1;
  if (name == "strategy2") return StrategyKind::strategy2;
  if (name == "active_learning" || name == "strategy3") return StrategyKind::active_learning;
  if (name == "cross_year") return StrategyKind::cross_year;
  throw ConfigError(fmt::format("{}: unknown strategy '{}' (expected strategy1, strategy2, active_learning or cross_year)",
                                path, name));
}

std::size_t positive_size(JsonObjectReader& in, const std::string& key, std::size_t fallback) {
  const auto v = in.integer_or(key, static_cast<std::int64_t>(fallback));
  if (v < 1) throw ConfigError(in.path_of(key) + ": must be at least 1");
  return static_cast<std::size_t>(v);
}

void read_tree_limits(JsonObjectReader& in, TreeParams& tree) {
  if (const auto* depth = in.optional("max_depth")) {
    if (depth->is_null()) {
      tree.max_depth.reset();
    } else if (depth->is_number_integer() && depth->get<std::int64_t>() >= 1) {
      tree.max_depth = depth->get<std::size_t>();
    } else {
      throw ConfigError(in.path_of("max_depth") + ": expected null or a positive integer");
    }
  }
  const auto split = in.integer_or("min_samples_split", static_cast<std::int64_t>(tree.min_samples_split));
  if (split < 2) throw ConfigError(in.path_of("min_samples_split") + ": must be at least 2");
  tree.min_samples_split = static_cast<std::size_t>(split);
  if (const auto* mf = in.optional("max_features")) {
    if (mf->is_string() && mf->get<std::string>() == "sqrt") {
      tree.feature_rule = FeatureRule::sqrt;
    } else if (mf->is_string() && mf->get<std::string>() == "all") {
      tree.feature_rule = FeatureRule::all;
    } else if (mf->is_number_integer() && mf->get<std::int64_t>() >= 1) {
      tree.feature_rule = FeatureRule::fixed;
      tree.n_features = mf->get<std::size_t>();
    } else {
      throw ConfigError(in.path_of("max_features") + ": expected \"sqrt\", \"all\" or a positive integer");
    }
  }
}

ModelSpec read_model(JsonObjectReader in) {
  ModelSpec spec;
  try {
    spec = ModelSpec::from_name(in.string("learner"));
  } catch (const ConfigError& e) {
    throw ConfigError(in.path_of("learner") + ": " + e.what());
  }
  if (spec.learner == LearnerKind::forest) {
    spec.forest.n_trees = positive_size(in, "n_trees", spec.forest.n_trees);
    spec.forest.bootstrap = in.boolean_or("bootstrap", spec.forest.bootstrap);
    read_tree_limits(in, spec.forest.tree);
  } else if (spec.learner == LearnerKind::boost || spec.learner == LearnerKind::xgb) {
    spec.boost.n_rounds = positive_size(in, "n_rounds", spec.boost.n_rounds);
    spec.boost.learning_rate = in.number_or("learning_rate", spec.boost.learning_rate);
    if (!(spec.boost.learning_rate > 0.0 && spec.boost.learning_rate <= 1.0))
      throw ConfigError(in.path_of("learning_rate") + ": must lie in (0, 1]");
    if (spec.learner == LearnerKind::xgb) {
      spec.boost.l2 = in.number_or("l2", 1.0);
      if (!(spec.boost.l2 > 0.0)) throw ConfigError(in.path_of("l2") + ": must be positive");
    }
    read_tree_limits(in, spec.boost.tree);
  }
  in.finish();
  return spec;
}

nlohmann::json tree_json(const TreeParams& t) {
  nlohmann::json j;
  j["max_depth"] = t.max_depth ? nlohmann::json(*t.max_depth) : nlohmann::json(nullptr);
  j["min_samples_split"] = t.min_samples_split;
  if (t.feature_rule == FeatureRule::fixed) {
    j["max_features"] = t.n_features;
  } else {
    j["max_features"] = t.feature_rule == FeatureRule::sqrt ? "sqrt" : "all";
  }
  return j;
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override) {
  JsonObjectReader in(j, "");
  RunConfig cfg;

  const bool has_corpus = in.has("corpus");
  const bool has_synth = in.has("synthetic");
  if (has_corpus == has_synth) throw ConfigError("config: exactly one of 'corpus' and 'synthetic' is required");
  if (has_corpus) {
    auto c = in.object("corpus");
    cfg.corpus_path = std::filesystem::weakly_canonical(std::filesystem::absolute(base_dir / c.string("path")));
    try {
      cfg.corpus_format = corpus_format_from_string(c.string_or("format", "jsonl"));
    } catch (const ConfigError& e) {
      throw ConfigError(c.path_of("format") + ": " + e.what());
    }
    c.finish();
  } else {
    const auto& s = in.required("synthetic");
    const nlohmann::json spec_json = s.is_string() ? read_json_file(base_dir / s.get<std::string>()) : s;
    try {
      cfg.synthetic = SyntheticSpec::from_json(spec_json);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("synthetic.") + e.what());
    }
  }

  cfg.scheme = LabelScheme::parse(in.string_or("label_scheme", "three_class"));

  if (in.has("inclusion")) {
    auto p = in.object("inclusion");
    cfg.inclusion.year_min = static_cast<int>(p.integer_or("year_min", cfg.inclusion.year_min));
    cfg.inclusion.year_max = static_cast<int>(p.integer_or("year_max", cfg.inclusion.year_max));
    const auto chars = p.integer_or("min_abstract_chars", static_cast<std::int64_t>(cfg.inclusion.min_abstract_chars));
    if (chars < 0) throw ConfigError(p.path_of("min_abstract_chars") + ": must be non-negative");
    cfg.inclusion.min_abstract_chars = static_cast<std::size_t>(chars);
    cfg.inclusion.drop_score_zero = p.boolean_or("drop_score_zero", cfg.inclusion.drop_score_zero);
    cfg.inclusion.require_citation_record =
        p.boolean_or("require_citation_record", cfg.inclusion.require_citation_record);
    p.finish();
  } else {
    in.optional("inclusion");
  }
  validate(cfg.inclusion);
  cfg.dedup = in.boolean_or("dedup", true);

  if (const auto* u = in.optional("uoas")) {
    if (!u->is_array()) throw ConfigError("uoas: expected an array of integers");
    for (const auto& v : *u) {
      if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 34)
        throw ConfigError("uoas: entries must be integers in 1..34");
      cfg.uoas.push_back(v.get<int>());
    }
  }

  if (in.has("features")) {
    auto f = in.object("features");
    try {
      cfg.features.input_set = input_set_from_int(static_cast<int>(f.integer_or("input_set", 3)));
    } catch (const ConfigError& e) {
      throw ConfigError(f.path_of("input_set") + ": " + e.what());
    }
    cfg.features.k_total = positive_size(f, "k_total", cfg.features.k_total);
    if (cfg.features.input_set == InputSet::text && cfg.features.k_total <= dense_column_count(InputSet::text))
      throw ConfigError(f.path_of("k_total") + ": must exceed the 10 bibliometric columns");
    f.finish();
  } else {
    in.optional("features");
  }

  cfg.model = read_model(in.object("model"));

  {
    auto s = in.object("strategy");
    cfg.strategy.kind = strategy_from(s.string("name"), s.path_of("name"));
    auto& st = cfg.strategy;
    const bool uses_fraction = st.kind == StrategyKind::strategy1 || st.kind == StrategyKind::strategy2;
    if (uses_fraction) {
      st.plan.train_fraction = s.number_or("train_fraction", 0.5);
      if (!(st.plan.train_fraction > 0.0 && st.plan.train_fraction < 1.0))
        throw ConfigError(s.path_of("train_fraction") + ": must lie strictly between 0 and 1");
    }
    st.plan.n_iterations = positive_size(s, "iterations", 10);
    if (st.kind == StrategyKind::strategy2) {
      st.threshold = s.number_or("threshold", 0.85);
      if (!(st.threshold > 0.0 && st.threshold <= 1.0)) throw ConfigError(s.path_of("threshold") + ": must lie in (0, 1]");
    }
    if (st.kind == StrategyKind::active_learning) {
      st.active.batch_fraction = s.number_or("batch_fraction", st.active.batch_fraction);
      st.active.accuracy_threshold = s.number_or("threshold", st.active.accuracy_threshold);
      st.active.max_batches = positive_size(s, "max_batches", st.active.max_batches);
      st.active.refresh_features = s.boolean_or("refresh_features", st.active.refresh_features);
      try {
        st.active.validate();
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("strategy: ") + e.what());
      }
    }
    if (st.kind == StrategyKind::cross_year) {
      st.train_year = static_cast<int>(s.integer_or("train_year", 2014));
      if (const auto* ty = s.optional("test_years")) {
        if (!ty->is_array()) throw ConfigError(s.path_of("test_years") + ": expected an array of years");
        for (const auto& y : *ty) {
          if (!y.is_number_integer()) throw ConfigError(s.path_of("test_years") + ": expected integers");
          st.test_years.push_back(y.get<int>());
        }
      } else {
        for (int y = cfg.inclusion.year_min; y <= cfg.inclusion.year_max; ++y)
          if (y != st.train_year) st.test_years.push_back(y);
      }
    }
    s.finish();
  }

  if (in.has("half_sample")) {
    auto h = in.object("half_sample");
    HalfSampleConfig hs;
    hs.min_articles = positive_size(h, "min_articles", hs.min_articles);
    hs.iterations = positive_size(h, "iterations", hs.iterations);
    h.finish();
    cfg.half_sample = hs;
  } else {
    in.optional("half_sample");
  }

  if (in.has("terms")) {
    auto t = in.object("terms");
    const auto n = t.integer_or("top_n", 10);
    if (n < 0) throw ConfigError(t.path_of("top_n") + ": must be non-negative");
    cfg.terms_top_n = static_cast<std::size_t>(n);
    t.finish();
  } else {
    in.optional("terms");
  }

  if (seed_override) {
    in.optional("seed");
    cfg.seed = *seed_override;
  } else {
    if (!in.has("seed")) throw ConfigError("seed: required field missing");
    cfg.seed = in.unsigned_or("seed", 0);
  }
  cfg.strategy.plan.seed = cfg.seed;

  if (const auto* out = in.optional("output_dir")) {
    if (!out->is_string()) throw ConfigError("output_dir: expected a string");
    cfg.output_dir = base_dir / out->get<std::string>();
  }
  in.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  return parse_run_config(read_json_file(path), path.parent_path(), seed_override);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  if (corpus_path) {
    j["corpus"] = {{"path", corpus_path->generic_string()},
                   {"format", corpus_format == CorpusFormat::jsonl ? "jsonl" : "csv"}};
  } else {
    j["synthetic"] = synthetic->to_json();
  }
  j["label_scheme"] = scheme.name();
  j["inclusion"] = {{"year_min", inclusion.year_min},
                    {"year_max", inclusion.year_max},
                    {"min_abstract_chars", inclusion.min_abstract_chars},
                    {"drop_score_zero", inclusion.drop_score_zero},
                    {"require_citation_record", inclusion.require_citation_record}};
  j["dedup"] = dedup;
  j["uoas"] = uoas;
  j["features"] = {{"input_set", static_cast<int>(features.input_set)}, {"k_total", features.k_total}};

  nlohmann::json m;
  m["learner"] = model.name();
  if (model.learner == LearnerKind::forest) {
    m = {{"learner", model.name()}, {"n_trees", model.forest.n_trees}, {"bootstrap", model.forest.bootstrap}};
    m.update(tree_json(model.forest.tree));
  } else if (model.learner != LearnerKind::baseline) {
    m = {{"learner", model.name()}, {"n_rounds", model.boost.n_rounds}, {"learning_rate", model.boost.learning_rate}};
    if (model.learner == LearnerKind::xgb) m["l2"] = model.effective_boost().l2;
    m.update(tree_json(model.boost.tree));
  }
  j["model"] = m;

  nlohmann::json s;
  s["name"] = to_string(strategy.kind);
  s["iterations"] = strategy.plan.n_iterations;
  switch (strategy.kind) {
    case StrategyKind::strategy1:
      s["train_fraction"] = strategy.plan.train_fraction;
      break;
    case StrategyKind::strategy2:
      s["train_fraction"] = strategy.plan.train_fraction;
      s["threshold"] = strategy.threshold;
      break;
    case StrategyKind::active_learning:
      s["batch_fraction"] = strategy.active.batch_fraction;
      s["threshold"] = strategy.active.accuracy_threshold;
      s["max_batches"] = strategy.active.max_batches;
      s["refresh_features"] = strategy.active.refresh_features;
      break;
    case StrategyKind::cross_year:
      s["train_year"] = strategy.train_year;
      s["test_years"] = strategy.test_years;
      break;
  }
  j["strategy"] = s;
  if (half_sample) j["half_sample"] = {{"min_articles", half_sample->min_articles}, {"iterations", half_sample->iterations}};
  j["terms"] = {{"top_n", terms_top_n}};
  j["seed"] = seed;
  return j;
}

}  // namespace refscore::app
