#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gauc/dataset.hpp"
#include "gauc/kernel.hpp"
#include "gauc/predictor.hpp"

namespace gauc {

struct ObjectiveWeights {
  ObjectiveWeights(double alpha = 0.1, double beta = 0.1);

  double alpha;
  double beta;

  friend bool operator==(const ObjectiveWeights&, const ObjectiveWeights&) = default;
};

struct ObjectiveValue {
  double total;
  double mmd2;
  double emid;
  double var;
};

inline constexpr std::size_t kDefaultProbeCap = 64;
inline constexpr std::size_t kBandwidthPairs = 20000;

// All probe rows when there are at most `cap`; otherwise a seeded sample
// stratified by class (largest-remainder allocation). Sorted ascending.
std::vector<std::size_t> select_probes(const LabeledDataset& dataset, std::size_t cap, std::uint64_t seed);

// Everything the objective needs, frozen before the search starts: the train
// split as the MMD reference set, the kernel bandwidth and the probe context.
// Without an explicit kernel, sigma comes from the median heuristic over the
// train split. `l2_normalize` rescales rows to unit norm for the MMD term only.
class EvaluationContext {
 public:
  EvaluationContext(const LabeledDataset& dataset, const PromptEmbeddingSet& prompts, const PredictorConfig& predictor,
                    std::vector<std::size_t> probe_indices, std::optional<KernelConfig> kernel = std::nullopt,
                    double shrinkage = kDefaultShrinkage, bool l2_normalize = false);

  const LabeledDataset& dataset() const { return *dataset_; }
  // Train rows in the MMD representation.
  const EmbeddingMatrix& reference() const { return reference_; }
  // Row `i` of the dataset in the MMD representation.
  std::span<const float> mmd_row(std::size_t i) const { return mmd_rows_.row(i); }
  EmbeddingMatrix mmd_rows(std::span<const std::size_t> indices) const { return mmd_rows_.select_rows(indices); }
  const KernelConfig& kernel() const { return kernel_; }
  const ProbeContext& probes() const { return probes_; }
  const PredictorConfig& predictor() const { return probes_.config(); }

 private:
  const LabeledDataset* dataset_;
  EmbeddingMatrix mmd_rows_;
  EmbeddingMatrix reference_;
  KernelConfig kernel_;
  ProbeContext probes_;
};

EmbeddingMatrix l2_normalized(const EmbeddingMatrix& m);

ObjectiveValue objective(const Coreset& coreset, const EvaluationContext& context, const ObjectiveWeights& weights);

struct SelectionResult {
  Coreset coreset;
  std::vector<double> objective_trace;
  ObjectiveValue terms;
  std::size_t accepted_swaps = 0;
  std::uint64_t seed = 0;
  ObjectiveWeights weights;
  std::size_t iterations = 0;
};

// Seeded class-stratified uniform draw of `shots_per_class` train rows per class.
Coreset initial_coreset(const LabeledDataset& dataset, std::size_t shots_per_class, std::uint64_t seed);

// Random single-swap local search: each iteration picks a coreset position and
// a same-class non-member train row uniformly, and keeps the swap only if the
// total objective drops by more than 1e-12.
SelectionResult greedy_select(const EvaluationContext& context, std::size_t shots_per_class, std::size_t iterations,
                              const ObjectiveWeights& weights, std::uint64_t seed,
                              std::optional<Coreset> start = std::nullopt);

// One greedy run per weight setting, all from the same seed and start.
std::vector<SelectionResult> ablate(const EvaluationContext& context, const std::vector<ObjectiveWeights>& grid,
                                    std::size_t shots_per_class, std::size_t iterations, std::uint64_t seed);

}  // namespace gauc
