#include "refscore/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "refscore/errors.hpp"
#include "refscore/labels.hpp"
#include "refscore/rng.hpp"

namespace refscore {

AccuracyResult accuracy(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size()) throw PreconditionError("predictions and truths differ in length");
  if (truths.empty()) throw PreconditionError("accuracy of an empty prediction set");
  std::size_t hits = 0;
  std::map<int, std::size_t> freq;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    hits += predictions[i] == truths[i] ? 1 : 0;
    ++freq[truths[i]];
  }
  std::size_t modal = 0;
  for (const auto& [cls, count] : freq) modal = std::max(modal, count);
  const double n = static_cast<double>(truths.size());
  AccuracyResult r;
  r.raw = static_cast<double>(hits) / n;
  r.baseline = static_cast<double>(modal) / n;
  r.above_baseline = r.raw - r.baseline;
  return r;
}

double research_power(std::span<const int> scores) {
  if (scores.empty()) throw PreconditionError("research power of an empty score list");
  double total = 0.0;
  for (int s : scores) total += funding_weight(s);
  return total / static_cast<double>(scores.size());
}

Stat stat_of(std::span<const double> values) {
  if (values.empty()) return {};
  Stat s{0.0, values.front(), values.front()};
  for (double v : values) {
    s.mean += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean /= static_cast<double>(values.size());
  return s;
}

ShiftReport institutional_shift(const std::vector<std::vector<InstitutionArticle>>& iterations,
                                std::span<const double> predicted_fractions, std::span<const std::string> roster) {
  if (predicted_fractions.size() != iterations.size())
    throw PreconditionError("one predicted fraction is needed per iteration");

  struct Acc {
    std::vector<double> human, ai, gain, overall;
    std::size_t articles = 0;
  };
  std::map<std::string, Acc> acc;
  for (std::size_t it = 0; it < iterations.size(); ++it) {
    std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> by_inst;
    for (const auto& a : iterations[it]) {
      auto& [human, predicted] = by_inst[a.institution];
      human.push_back(a.human);
      predicted.push_back(a.predicted);
    }
    for (const auto& [inst, scores] : by_inst) {
      auto& entry = acc[inst];
      const double h = research_power(scores.first);
      const double p = research_power(scores.second);
      entry.human.push_back(h);
      entry.ai.push_back(p);
      entry.gain.push_back(p - h);
      entry.overall.push_back((p - h) * predicted_fractions[it]);
      entry.articles += scores.first.size();
    }
  }

  ShiftReport report;
  for (const auto& [inst, e] : acc) {
    InstitutionShift s;
    s.institution = inst;
    s.iterations = e.gain.size();
    s.mean_articles = iterations.empty() ? 0.0 : static_cast<double>(e.articles) / static_cast<double>(iterations.size());
    s.human_power = stat_of(e.human).mean;
    s.ai_power = stat_of(e.ai).mean;
    s.gain = stat_of(e.gain);
    s.overall_gain = stat_of(e.overall);
    report.institutions.push_back(std::move(s));
  }
  std::set<std::string> seen;
  for (const auto& name : roster)
    if (!acc.contains(name) && seen.insert(name).second) report.excluded.push_back(name);
  std::sort(report.excluded.begin(), report.excluded.end());
  return report;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("pearson needs equal-length inputs");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::map<int, std::optional<double>> institution_correlations(std::span<const UoaInstitutionScore> articles,
                                                              CorrelationMode mode) {
  struct Sums {
    double human = 0.0, predicted = 0.0;
    std::size_t n = 0;
  };
  std::map<int, std::map<std::string, Sums>> grouped;
  for (const auto& a : articles) {
    auto& s = grouped[a.uoa][a.institution];
    s.human += funding_weight(a.human);
    s.predicted += funding_weight(a.predicted);
    ++s.n;
  }
  std::map<int, std::optional<double>> out;
  for (const auto& [uoa, insts] : grouped) {
    std::vector<double> h, p;
    for (const auto& [name, s] : insts) {
      const double div = mode == CorrelationMode::average ? static_cast<double>(s.n) : 1.0;
      h.push_back(s.human / div);
      p.push_back(s.predicted / div);
    }
    out[uoa] = pearson(h, p);
  }
  return out;
}

namespace {

double gpa_score(int score) { return static_cast<double>(std::max(score, 2)); }

// Rank (1 = best) of every institution, GPA descending, ties by id.
std::vector<std::size_t> ranks_of(const std::vector<double>& gpa) {
  std::vector<std::size_t> order(gpa.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Institutions are already sorted by id, so a stable sort breaks ties by id.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gpa[a] > gpa[b]; });
  std::vector<std::size_t> rank(gpa.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  return rank;
}

}  // namespace

RankShiftReport gpa_rank_shift(std::span<const GpaOutput> outputs,
                               const std::vector<std::map<std::string, int>>& substitutions) {
  std::map<std::string, std::size_t> inst_index;
  for (const auto& o : outputs) inst_index.emplace(o.institution, 0);
  std::size_t k = 0;
  for (auto& [name, idx] : inst_index) idx = k++;
  std::map<std::string, const GpaOutput*> by_id;
  for (const auto& o : outputs)
    if (!by_id.emplace(o.id, &o).second) throw ValueError(fmt::format("duplicate output id '{}'", o.id));

  auto gpas = [&](const std::map<std::string, int>* subs) {
    std::vector<double> sum(inst_index.size(), 0.0), count(inst_index.size(), 0.0);
    for (const auto& o : outputs) {
      int score = o.human;
      if (subs) {
        if (auto it = subs->find(o.id); it != subs->end()) score = it->second;
      }
      const auto idx = inst_index.at(o.institution);
      sum[idx] += gpa_score(score);
      count[idx] += 1.0;
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= count[i];
    return sum;
  };

  const auto human = gpas(nullptr);
  const auto human_rank = ranks_of(human);
  RankShiftReport report;
  std::vector<std::vector<double>> ai_gpa(inst_index.size()), delta(inst_index.size());
  for (const auto& subs : substitutions) {
    for (const auto& [id, score] : subs)
      if (!by_id.contains(id)) throw LookupError(fmt::format("substituted output '{}' is not in the output list", id));
    const auto g = gpas(&subs);
    const auto rank = ranks_of(g);
    std::vector<int> d(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      d[i] = static_cast<int>(human_rank[i]) - static_cast<int>(rank[i]);
      ai_gpa[i].push_back(g[i]);
      delta[i].push_back(d[i]);
    }
    report.deltas.push_back(std::move(d));
  }
  for (const auto& [name, idx] : inst_index) {
    RankShift s;
    s.institution = name;
    s.human_gpa = human[idx];
    s.human_rank = human_rank[idx];
    s.ai_gpa = stat_of(ai_gpa[idx]);
    s.rank_delta = stat_of(delta[idx]);
    report.institutions.push_back(std::move(s));
  }
  return report;
}

SubgroupShiftReport subgroup_shift(const std::vector<std::vector<SubgroupArticle>>& iterations,
                                   std::span<const std::string> groups) {
  SubgroupShiftReport report;
  for (const auto& group : groups) {
    std::vector<double> means;
    std::size_t articles = 0;
    for (const auto& it : iterations) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& a : it) {
        if (!a.group || *a.group != group) continue;
        sum += funding_weight(a.predicted) - funding_weight(a.human);
        ++n;
      }
      if (n == 0) continue;
      means.push_back(sum / static_cast<double>(n));
      articles += n;
    }
    if (means.empty()) {
      report.empty_groups.push_back(group);
      continue;
    }
    report.groups.push_back({group, stat_of(means), articles});
  }
  return report;
}

SizeQualityCorrelations size_quality_correlations(std::span<const double> gain, std::span<const double> institution_size,
                                                  std::span<const double> submission_size,
                                                  std::span<const double> mean_power) {
  return {pearson(gain, institution_size), pearson(gain, submission_size), pearson(gain, mean_power)};
}

std::vector<HalfSampleEstimate> half_sample_doubling(std::span<const ArticleRecord> corpus,
                                                     std::size_t min_articles, std::size_t n_iterations,
                                                     std::uint64_t seed) {
  std::map<std::pair<int, std::string>, std::vector<int>> groups;
  for (const auto& a : corpus)
    if (a.score && *a.score >= 1) groups[{a.uoa, a.institution}].push_back(*a.score);

  std::vector<HalfSampleEstimate> out;
  std::uint64_t stream = 0;
  for (const auto& [key, scores] : groups) {
    const std::uint64_t group_seed = derive_seed(seed, stream++);
    if (scores.size() < std::max<std::size_t>(2, min_articles)) continue;
    HalfSampleEstimate e;
    e.uoa = key.first;
    e.institution = key.second;
    e.n_articles = scores.size();
    e.true_power = research_power(scores);
    const std::size_t half = scores.size() / 2;
    Rng rng(group_seed);
    std::vector<int> pool = scores;
    for (std::size_t it = 0; it < n_iterations; ++it) {
      for (std::size_t i = 0; i < half; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
      e.estimates.push_back(research_power(std::span<const int>(pool).first(half)));
    }
    e.estimate = stat_of(e.estimates);
    out.push_back(std::move(e));
  }
  return out;
}

BlendedAccuracy blend_overall_accuracy(double human_fraction, double ai_accuracy, double eligible_fraction) {
  for (double v : {human_fraction, ai_accuracy, eligible_fraction})
    if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError("blend inputs must lie in [0, 1]");
  BlendedAccuracy b;
  b.eligible = human_fraction + (1.0 - human_fraction) * ai_accuracy;
  b.all_articles = (1.0 - eligible_fraction) + eligible_fraction * b.eligible;
  return b;
}

}  // namespace refscore
