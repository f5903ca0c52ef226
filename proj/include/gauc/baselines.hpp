#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "gauc/dataset.hpp"
#include "gauc/kernel.hpp"

namespace gauc {

// Class-stratified uniform sample without replacement.
Coreset select_random(const LabeledDataset& dataset, std::size_t shots_per_class, std::uint64_t seed);

// Per class, the `shots_per_class` train rows closest to `query` in Euclidean
// distance; ties go to the lower row index. Query dependent.
Coreset select_knn(const LabeledDataset& dataset, std::span<const float> query, std::size_t shots_per_class);

// Per class, greedily adds the train row that most lowers the class-restricted
// MMD^2 between that class's train rows and the selected rows. The selected
// set's self-similarity keeps its diagonal, as in kernel herding.
Coreset select_herding(const LabeledDataset& dataset, std::size_t shots_per_class, const KernelConfig& config);

}  // namespace gauc
