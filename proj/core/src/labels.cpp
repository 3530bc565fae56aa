#include "refscore/labels.hpp"

#include "refscore/errors.hpp"

namespace refscore {

LabelScheme LabelScheme::parse(const std::string& name) {
  if (name == "three_class") return LabelScheme(LabelMode::three_class);
  if (name == "four_class") return LabelScheme(LabelMode::four_class);
  throw ConfigError("unknown label scheme '" + name + "' (expected three_class or four_class)");
}

std::string LabelScheme::name() const { return mode_ == LabelMode::three_class ? "three_class" : "four_class"; }

int LabelScheme::class_of(int score) const {
  if (score < 1 || score > 4) throw ValueError("score " + std::to_string(score) + " has no class (expected 1..4)");
  if (mode_ == LabelMode::four_class) return score - 1;
  return score <= 2 ? 0 : score - 2;
}

int LabelScheme::representative_score(int cls) const {
  if (cls < 0 || static_cast<std::size_t>(cls) >= n_classes())
    throw ValueError("class index " + std::to_string(cls) + " out of range");
  if (mode_ == LabelMode::four_class) return cls + 1;
  return cls + 2;
}

std::string LabelScheme::class_name(int cls) const {
  const int score = representative_score(cls);
  if (mode_ == LabelMode::three_class && cls == 0) return "low";
  return std::to_string(score);
}

std::vector<std::string> LabelScheme::class_names() const {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < n_classes(); ++c) names.push_back(class_name(static_cast<int>(c)));
  return names;
}

}  // namespace refscore
