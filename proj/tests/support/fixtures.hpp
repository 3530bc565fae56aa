#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "refscore/corpus.hpp"
#include "refscore/features.hpp"
#include "refscore/rng.hpp"
#include "refscore/synthetic.hpp"

namespace refscore::testing {

inline ArticleRecord make_article(std::string id, int uoa = 1, std::optional<int> score = 3) {
  ArticleRecord a;
  a.id = id;
  a.doi_group = "doi-" + id;
  a.uoa = uoa;
  a.year = 2016;
  a.score = score;
  a.title = "Title of " + id;
  a.abstract = std::string(600, 'x');
  a.journal = "Journal A";
  a.field_id = "F1";
  a.citations = 3;
  a.institution = "inst-1";
  return a;
}

// Dense-only matrix from row-major values.
inline FeatureMatrix dense_matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  FeatureMatrix m;
  m.input_set = InputSet::bibliometric;
  m.n_dense = cols;
  m.dense = std::move(values);
  m.text.assign(rows, {});
  for (std::size_t r = 0; r < rows; ++r) m.row_ids.push_back(fmt::format("r{:04}", r));
  for (std::size_t c = 0; c < cols; ++c) m.column_names.push_back(fmt::format("c{}", c));
  return m;
}

// Random matrix with `n_dense` continuous and `n_text` binary columns.
inline FeatureMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t n_dense, std::size_t n_text,
                                   double text_density = 0.3, int value_levels = 0) {
  FeatureMatrix m;
  m.input_set = n_text > 0 ? InputSet::text : InputSet::bibliometric;
  m.n_dense = n_dense;
  m.dense.resize(rows * n_dense);
  for (double& v : m.dense)
    v = value_levels > 0 ? static_cast<double>(rng.index(static_cast<std::size_t>(value_levels))) : rng.normal();
  m.text.assign(rows, {});
  for (std::size_t r = 0; r < rows; ++r) {
    m.row_ids.push_back(fmt::format("r{:04}", r));
    for (std::uint32_t t = 0; t < n_text; ++t)
      if (rng.bernoulli(text_density)) m.text[r].push_back(t);
  }
  for (std::size_t c = 0; c < n_dense; ++c) m.column_names.push_back(fmt::format("d{}", c));
  for (std::size_t c = 0; c < n_text; ++c) m.column_names.push_back(fmt::format("unigram:t{}", c));
  return m;
}

inline std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t n_classes) {
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.index(n_classes));
  return y;
}

// Labels driven by the sign of a linear score on the first two columns.
inline std::vector<int> separable_labels(const FeatureMatrix& m) {
  std::vector<int> y(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) y[r] = m.value(r, 0) + 0.5 * m.value(r, 1) > 0.0 ? 1 : 0;
  return y;
}

inline Corpus planted_corpus(std::size_t n, double noise, std::uint64_t seed) {
  return generate_synthetic(SyntheticSpec::planted_demo(n, noise), seed);
}

}  // namespace refscore::testing
