#include "gauc/baselines.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "gauc/error.hpp"
#include "gauc/rng.hpp"

namespace gauc {

namespace {

void check_feasible(const LabeledDataset& dataset, std::size_t shots) {
  if (shots == 0) throw ConfigError("shots_per_class must be >= 1");
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    if (dataset.train_rows_of(static_cast<int>(c)).size() < shots) {
      throw ConfigError("class " + dataset.class_names()[c] + " has fewer than " + std::to_string(shots) +
                        " train rows");
    }
  }
}

double sq_dist(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Coreset select_random(const LabeledDataset& dataset, std::size_t shots_per_class, std::uint64_t seed) {
  check_feasible(dataset, shots_per_class);
  auto rng = make_stream(seed, streams::kRandomBaseline);
  std::vector<std::size_t> indices;
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    auto pool = dataset.train_rows_of(static_cast<int>(c));
    std::shuffle(pool.begin(), pool.end(), rng);
    indices.insert(indices.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(shots_per_class));
  }
  return {dataset, std::move(indices), shots_per_class};
}

Coreset select_knn(const LabeledDataset& dataset, std::span<const float> query, std::size_t shots_per_class) {
  check_feasible(dataset, shots_per_class);
  if (query.size() != dataset.dim()) throw ShapeError("kNN query dim does not match dataset");
  std::vector<std::size_t> indices;
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    const auto& pool = dataset.train_rows_of(static_cast<int>(c));
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(pool.size());
    for (std::size_t idx : pool) scored.emplace_back(sq_dist(dataset.embeddings().row(idx), query), idx);
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(shots_per_class), scored.end());
    for (std::size_t i = 0; i < shots_per_class; ++i) indices.push_back(scored[i].second);
  }
  return {dataset, std::move(indices), shots_per_class};
}

Coreset select_herding(const LabeledDataset& dataset, std::size_t shots_per_class, const KernelConfig& config) {
  check_feasible(dataset, shots_per_class);
  const auto& emb = dataset.embeddings();
  std::vector<std::size_t> indices;
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    const auto& pool = dataset.train_rows_of(static_cast<int>(c));
    const std::size_t n = pool.size();
    // Class Gram matrix; mean similarity of each candidate to its class.
    std::vector<double> gram(n * n);
    std::vector<double> mean_sim(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      gram[a * n + a] = 1.0;
      for (std::size_t b = a + 1; b < n; ++b) {
        const double k = rbf_kernel(emb.row(pool[a]), emb.row(pool[b]), config);
        gram[a * n + b] = k;
        gram[b * n + a] = k;
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      mean_sim[a] = std::accumulate(gram.begin() + static_cast<std::ptrdiff_t>(a * n),
                                    gram.begin() + static_cast<std::ptrdiff_t>((a + 1) * n), 0.0) /
                    static_cast<double>(n);
    }
    // For a chosen set S of size m, the class-dependent part of MMD^2 is
    //   sum_{i, j in S} k / m^2 - 2 sum_{s in S} mean_sim[s] / m.
    // The diagonal stays in the S x S sum (kernel herding), so m == 1 is defined.
    std::vector<std::size_t> chosen;
    std::vector<char> used(n, 0);
    double pair_sum = 0.0;
    double sim_sum = 0.0;
    for (std::size_t step = 0; step < shots_per_class; ++step) {
      const auto m = static_cast<double>(step + 1);
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_a = n;
      double best_pairs = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        if (used[a]) continue;
        double add = 0.0;
        for (std::size_t s : chosen) add += gram[a * n + s];
        const double pairs = pair_sum + 2.0 * add;
        const double within = (pairs + m) / (m * m);
        const double score = within - 2.0 * (sim_sum + mean_sim[a]) / m;
        if (score < best) {
          best = score;
          best_a = a;
          best_pairs = pairs;
        }
      }
      used[best_a] = 1;
      chosen.push_back(best_a);
      pair_sum = best_pairs;
      sim_sum += mean_sim[best_a];
    }
    for (std::size_t a : chosen) indices.push_back(pool[a]);
  }
  return {dataset, std::move(indices), shots_per_class};
}

}  // namespace gauc
