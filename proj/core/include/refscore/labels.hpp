#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace refscore {

enum class LabelMode { three_class, four_class };

// Maps star scores (1..4) onto ordered class indices. In three-class mode
// 1* and 2* collapse into a single "low" class: low < 3 < 4.
class LabelScheme {
 public:
  explicit LabelScheme(LabelMode mode = LabelMode::three_class) : mode_(mode) {}

  static LabelScheme parse(const std::string& name);

  LabelMode mode() const { return mode_; }
  std::string name() const;
  std::size_t n_classes() const { return mode_ == LabelMode::three_class ? 3 : 4; }

  // Throws ValueError for scores outside 1..4.
  int class_of(int score) const;
  // Star score standing in for a class; three-class "low" maps to 2.
  int representative_score(int cls) const;
  std::string class_name(int cls) const;
  std::vector<std::string> class_names() const;

  friend bool operator==(const LabelScheme&, const LabelScheme&) = default;

 private:
  LabelMode mode_;
};

// Funding weight of a star score: 4* -> 100, 3* -> 25, anything lower -> 0.
inline double funding_weight(int score) {
  if (score >= 4) return 100.0;
  if (score == 3) return 25.0;
  return 0.0;
}

}  // namespace refscore
