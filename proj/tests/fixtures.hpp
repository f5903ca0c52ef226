#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gauc/dataset.hpp"
#include "gauc/embedding.hpp"

namespace fixture {

inline std::vector<std::vector<double>> random_rows(std::mt19937_64& rng, std::size_t n, std::size_t d,
                                                    double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows)
    for (auto& v : r) v = g(rng);
  return rows;
}

// Rows as stored (rounded to float) and read back as doubles.
inline std::vector<std::vector<double>> as_stored(const gauc::EmbeddingMatrix& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) rows[i].assign(m.row(i).begin(), m.row(i).end());
  return rows;
}

inline std::vector<std::string> names(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back("c" + std::to_string(i));
  return out;
}

inline gauc::LabeledDataset dataset(const std::vector<std::vector<double>>& rows, std::vector<int> labels,
                                    std::vector<gauc::Split> splits, std::size_t classes) {
  return {gauc::EmbeddingMatrix::from_rows(rows), std::move(labels), std::move(splits), names(classes)};
}

// Every row in the train split.
inline gauc::LabeledDataset train_only(const std::vector<std::vector<double>>& rows, std::vector<int> labels,
                                       std::size_t classes) {
  std::vector<gauc::Split> splits(rows.size(), gauc::Split::kTrain);
  return dataset(rows, std::move(labels), std::move(splits), classes);
}

inline gauc::PromptEmbeddingSet prompts(std::size_t dim, double shift, std::size_t rows = 3) {
  std::vector<std::vector<double>> o, p;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> v(dim, 0.0);
    v[r % dim] = 1.0;
    o.push_back(v);
    for (auto& x : v) x += shift;
    p.push_back(v);
  }
  return {gauc::EmbeddingMatrix::from_rows(o), gauc::EmbeddingMatrix::from_rows(p)};
}

// Per class: a tight cluster of train rows with one outlier among them, plus
// `probes` probe rows drawn from the cluster.
inline gauc::LabeledDataset cluster_with_outlier(std::uint64_t seed, std::size_t classes, std::size_t per_class,
                                                 std::size_t probes = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.2);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<gauc::Split> splits;
  for (std::size_t c = 0; c < classes; ++c) {
    const double cx = 3.0 * static_cast<double>(c);
    for (std::size_t i = 0; i < per_class + probes; ++i) {
      const double off = i == 0 ? 4.0 : 0.0;
      rows.push_back({cx + g(rng) + off, g(rng) + off});
      labels.push_back(static_cast<int>(c));
      splits.push_back(i < per_class ? gauc::Split::kTrain : gauc::Split::kProbe);
    }
  }
  return dataset(rows, labels, splits, classes);
}

}  // namespace fixture
