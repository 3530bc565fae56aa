#include "refscore/model.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "refscore/errors.hpp"

namespace refscore {

ModelSpec ModelSpec::from_name(std::string_view name) {
  ModelSpec spec;
  std::string_view base = name;
  if (name != "baseline" && !name.empty() && name.back() == 'o') {
    spec.ordinal = true;
    base.remove_suffix(1);
  }
  if (base == "rfc") {
    spec.learner = LearnerKind::forest;
  } else if (base == "gbc") {
    spec.learner = LearnerKind::boost;
  } else if (base == "xgb") {
    spec.learner = LearnerKind::xgb;
  } else if (base == "baseline") {
    spec.learner = LearnerKind::baseline;
  } else {
    throw ConfigError(fmt::format("unknown learner '{}' (expected rfc, rfco, gbc, gbco, xgb, xgbo or baseline)", name));
  }
  return spec;
}

std::string ModelSpec::name() const {
  std::string base;
  switch (learner) {
    case LearnerKind::baseline:
      return "baseline";
    case LearnerKind::forest:
      base = "rfc";
      break;
    case LearnerKind::boost:
      base = "gbc";
      break;
    case LearnerKind::xgb:
      base = "xgb";
      break;
  }
  return ordinal ? base + "o" : base;
}

void ModelSpec::validate() const {
  if (learner == LearnerKind::baseline && ordinal) throw ConfigError("the baseline has no ordinal variant");
  if (learner == LearnerKind::forest) forest.validate();
  if (learner == LearnerKind::boost || learner == LearnerKind::xgb) effective_boost().validate();
}

BoostParams ModelSpec::effective_boost() const {
  BoostParams p = boost;
  if (learner == LearnerKind::xgb) {
    if (p.l2 <= 0.0) p.l2 = 1.0;
  } else {
    p.l2 = 0.0;
  }
  return p;
}

BaselineModel baseline_modal(std::span<const int> labels, std::size_t n_classes, std::size_t n_features) {
  if (labels.empty()) throw PreconditionError("the modal baseline needs at least one label");
  BaselineModel model;
  model.n_features = n_features;
  model.frequencies.assign(n_classes, 0.0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw ValueError(fmt::format("label {} out of range", y));
    model.frequencies[static_cast<std::size_t>(y)] += 1.0;
  }
  for (double& f : model.frequencies) f /= static_cast<double>(labels.size());
  model.modal = ProbVector{model.frequencies}.predicted();
  return model;
}

std::vector<ProbVector> predict_proba(const BaselineModel& model, const FeatureMatrix& matrix) {
  return std::vector<ProbVector>(matrix.rows(), ProbVector{model.frequencies});
}

ProbVector combine_ordinal(std::span<const double> at_least) {
  const std::size_t c = at_least.size() + 1;
  std::vector<double> cum(c + 1);
  cum[0] = 1.0;
  for (std::size_t t = 1; t < c; ++t) cum[t] = at_least[t - 1];
  cum[c] = 0.0;
  ProbVector out;
  out.p.resize(c);
  double total = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    out.p[k] = std::max(0.0, cum[k] - cum[k + 1]);
    total += out.p[k];
  }
  for (double& v : out.p) v /= total;
  return out;
}

namespace {

BinaryModel fit_binary(const ModelSpec& base, const FeatureMatrix& matrix, std::span<const int> labels,
                       std::uint64_t seed) {
  if (base.learner == LearnerKind::baseline) return baseline_modal(labels, 2, matrix.cols());
  if (base.learner == LearnerKind::forest) return fit_forest(matrix, labels, 2, base.forest, seed);
  return fit_boost(matrix, labels, 2, base.effective_boost(), seed);
}

std::vector<ProbVector> predict_binary(const BinaryModel& model, const FeatureMatrix& matrix) {
  return std::visit([&](const auto& m) { return predict_proba(m, matrix); }, model);
}

std::size_t feature_count(const Model& model) {
  return std::visit([](const auto& m) { return m.n_features; }, model);
}

}  // namespace

OrdinalModel fit_ordinal(const ModelSpec& base, const FeatureMatrix& matrix, std::span<const int> labels,
                         std::size_t n_classes, std::uint64_t seed) {
  if (n_classes < 2) throw PreconditionError("ordinal decomposition needs at least two classes");
  if (labels.size() != matrix.rows()) throw PreconditionError("labels and feature rows differ in length");
  if (labels.empty()) throw PreconditionError("cannot fit a model on zero rows");
  OrdinalModel model;
  model.n_classes = n_classes;
  model.n_features = matrix.cols();
  std::vector<int> task_labels(labels.size());
  for (std::size_t t = 1; t < n_classes; ++t) {
    for (std::size_t i = 0; i < labels.size(); ++i) task_labels[i] = labels[i] >= static_cast<int>(t) ? 1 : 0;
    if (std::all_of(task_labels.begin(), task_labels.end(), [&](int y) { return y == task_labels.front(); }))
      throw PreconditionError(fmt::format("ordinal task {} (class >= {} vs below) has a single class in its training rows",
                                          t, t));
    model.tasks.push_back(fit_binary(base, matrix, task_labels, derive_seed(seed, t)));
  }
  return model;
}

std::vector<ProbVector> predict_proba(const OrdinalModel& model, const FeatureMatrix& matrix) {
  std::vector<std::vector<ProbVector>> per_task;
  for (const auto& task : model.tasks) per_task.push_back(predict_binary(task, matrix));
  std::vector<ProbVector> out(matrix.rows());
  std::vector<double> at_least(model.tasks.size());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t t = 0; t < model.tasks.size(); ++t) at_least[t] = per_task[t][r].p[1];
    out[r] = combine_ordinal(at_least);
  }
  return out;
}

Model fit_model(const ModelSpec& spec, const FeatureMatrix& matrix, std::span<const int> labels,
                std::size_t n_classes, std::uint64_t seed) {
  spec.validate();
  if (labels.size() != matrix.rows()) throw PreconditionError("labels and feature rows differ in length");
  if (labels.empty()) throw PreconditionError("cannot fit a model on zero rows");
  if (spec.ordinal) return fit_ordinal(spec, matrix, labels, n_classes, seed);
  switch (spec.learner) {
    case LearnerKind::baseline:
      return baseline_modal(labels, n_classes, matrix.cols());
    case LearnerKind::forest:
      return fit_forest(matrix, labels, n_classes, spec.forest, seed);
    case LearnerKind::boost:
    case LearnerKind::xgb:
      return fit_boost(matrix, labels, n_classes, spec.effective_boost(), seed);
  }
  throw ConfigError("unknown learner");
}

std::vector<ProbVector> predict_proba(const Model& model, const FeatureMatrix& matrix) {
  const std::size_t expected = feature_count(model);
  if (expected != 0 && expected != matrix.cols())
    throw PreconditionError(
        fmt::format("model was trained on {} columns but the matrix has {}", expected, matrix.cols()));
  return std::visit([&](const auto& m) { return predict_proba(m, matrix); }, model);
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

nlohmann::json tree_params_json(const TreeParams& p) {
  nlohmann::json j;
  j["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
  j["min_samples_split"] = p.min_samples_split;
  j["feature_rule"] = p.feature_rule == FeatureRule::all ? "all" : p.feature_rule == FeatureRule::sqrt ? "sqrt" : "fixed";
  j["n_features"] = p.n_features;
  return j;
}

TreeParams tree_params_from(const nlohmann::json& j) {
  TreeParams p;
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<std::size_t>();
  p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
  const auto rule = j.at("feature_rule").get<std::string>();
  p.feature_rule = rule == "all" ? FeatureRule::all : rule == "sqrt" ? FeatureRule::sqrt : FeatureRule::fixed;
  p.n_features = j.at("n_features").get<std::size_t>();
  return p;
}

nlohmann::json trees_json(const std::vector<Tree>& trees) {
  auto arr = nlohmann::json::array();
  for (const auto& t : trees) arr.push_back(tree_to_json(t));
  return arr;
}

std::vector<Tree> trees_from(const nlohmann::json& j) {
  std::vector<Tree> trees;
  for (const auto& t : j) trees.push_back(tree_from_json(t));
  return trees;
}

nlohmann::json to_json_body(const BaselineModel& m) {
  return {{"kind", "baseline"}, {"frequencies", m.frequencies}, {"modal", m.modal}, {"n_features", m.n_features}};
}

nlohmann::json to_json_body(const ForestModel& m) {
  return {{"kind", "forest"},
          {"n_classes", m.n_classes},
          {"n_features", m.n_features},
          {"seed", m.seed},
          {"trees", trees_json(m.trees)}};
}

nlohmann::json to_json_body(const BoostModel& m) {
  auto rounds = nlohmann::json::array();
  for (const auto& r : m.rounds) rounds.push_back({{"step", r.step}, {"trees", trees_json(r.trees)}});
  return {{"kind", "boost"},
          {"n_classes", m.n_classes},
          {"n_features", m.n_features},
          {"initial", m.initial},
          {"train_loss", m.train_loss},
          {"params",
           {{"n_rounds", m.params.n_rounds},
            {"learning_rate", m.params.learning_rate},
            {"l2", m.params.l2},
            {"tree", tree_params_json(m.params.tree)}}},
          {"rounds", rounds}};
}

nlohmann::json to_json_body(const OrdinalModel& m) {
  auto tasks = nlohmann::json::array();
  for (const auto& t : m.tasks) tasks.push_back(std::visit([](const auto& x) { return to_json_body(x); }, t));
  return {{"kind", "ordinal"}, {"n_classes", m.n_classes}, {"n_features", m.n_features}, {"tasks", tasks}};
}

Model from_json_body(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "baseline") {
    BaselineModel m;
    m.frequencies = j.at("frequencies").get<std::vector<double>>();
    m.modal = j.at("modal").get<int>();
    m.n_features = j.at("n_features").get<std::size_t>();
    return m;
  }
  if (kind == "forest") {
    ForestModel m;
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.trees = trees_from(j.at("trees"));
    return m;
  }
  if (kind == "boost") {
    BoostModel m;
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.initial = j.at("initial").get<std::vector<double>>();
    m.train_loss = j.at("train_loss").get<std::vector<double>>();
    const auto& p = j.at("params");
    m.params.n_rounds = p.at("n_rounds").get<std::size_t>();
    m.params.learning_rate = p.at("learning_rate").get<double>();
    m.params.l2 = p.at("l2").get<double>();
    m.params.tree = tree_params_from(p.at("tree"));
    for (const auto& r : j.at("rounds")) m.rounds.push_back({trees_from(r.at("trees")), r.at("step").get<double>()});
    return m;
  }
  if (kind == "ordinal") {
    OrdinalModel m;
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& t : j.at("tasks")) {
      auto inner = from_json_body(t);
      std::visit(
          [&](auto&& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, OrdinalModel>) {
              throw ValueError("ordinal tasks cannot be ordinal models");
            } else {
              m.tasks.emplace_back(std::move(x));
            }
          },
          std::move(inner));
    }
    if (m.tasks.size() + 1 != m.n_classes) throw ValueError("ordinal model task count does not match its classes");
    return m;
  }
  throw ValueError(fmt::format("unknown model kind '{}'", kind));
}

}  // namespace

nlohmann::json model_to_json(const Model& model) {
  auto body = std::visit([](const auto& m) { return to_json_body(m); }, model);
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["model"] = std::move(body);
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw ValueError(fmt::format("unsupported model format_version {} (expected {})", version, kModelFormatVersion));
    return from_json_body(j.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw ValueError(fmt::format("malformed model document: {}", e.what()));
  }
}

}  // namespace refscore
