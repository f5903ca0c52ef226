#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gauc/embedding.hpp"

namespace gauc {

enum class BandwidthRule { kFixed, kMedianHeuristic };

struct KernelConfig {
  explicit KernelConfig(double sigma, BandwidthRule rule = BandwidthRule::kFixed);

  double sigma;
  BandwidthRule bandwidth_rule;
};

// exp(-||a-b||^2 / (2 sigma^2)).
double rbf_kernel(std::span<const float> a, std::span<const float> b, const KernelConfig& config);
double rbf_kernel(std::span<const double> a, std::span<const double> b, const KernelConfig& config);

// Median pairwise Euclidean distance over up to `max_pairs` distinct pairs,
// divided by sqrt(2). All pairs are used when there are at most `max_pairs`.
// Returns 1.0 when the median is zero.
double median_heuristic_sigma(const EmbeddingMatrix& data, std::size_t max_pairs, std::uint64_t seed);

// Unbiased squared MMD: within-set means over ordered distinct pairs, cross
// mean over all |full| x |subset| pairs.
double mmd_squared(const EmbeddingMatrix& full, const EmbeddingMatrix& subset, const KernelConfig& config);

// Kernel sums that let a single-member swap be scored in O(|F| + |D|) kernel
// evaluations. The full-set term is computed once on construction.
class MmdCache {
 public:
  MmdCache(const EmbeddingMatrix& full, const EmbeddingMatrix& coreset_rows, const KernelConfig& config);

  double mmd_squared() const;

  // mmd^2(after replacing member `out_member` with `in_candidate`) - mmd^2(now).
  // Read-only; safe to call concurrently.
  double swap_delta(std::size_t out_member, std::span<const float> in_candidate) const;

  // Commits the swap scored by swap_delta.
  void apply_swap(std::size_t out_member, std::span<const float> in_candidate);

  std::size_t full_rows() const { return full_rows_; }
  std::size_t members() const { return members_.size() / dim_; }
  double sum_ff() const { return sum_ff_; }
  double sum_dd() const { return sum_dd_; }
  std::span<const double> cross_sums() const { return cross_sums_; }
  const KernelConfig& config() const { return config_; }

 private:
  struct SwapTerms {
    double cross;
    double row_sum_new;  // sum over other members of k(candidate, member)
    std::vector<double> row;
  };
  SwapTerms score_swap(std::size_t out_member, std::span<const float> in_candidate, bool keep_row) const;
  double member_row_sum(std::size_t pos) const;

  KernelConfig config_;
  EmbeddingMatrix full_;
  std::size_t full_rows_;
  std::size_t dim_;
  std::vector<float> members_;  // row-major copy of current coreset rows
  double sum_ff_ = 0.0;
  double sum_dd_ = 0.0;
  std::vector<double> cross_sums_;
  std::vector<double> member_kernel_rows_;  // m x m, diagonal = 1
};

inline MmdCache mmd_cache_build(const EmbeddingMatrix& full, const EmbeddingMatrix& coreset_rows,
                                const KernelConfig& config) {
  return {full, coreset_rows, config};
}

inline double mmd_cache_swap_delta(const MmdCache& cache, std::size_t out_member,
                                   std::span<const float> in_candidate) {
  return cache.swap_delta(out_member, in_candidate);
}

}  // namespace gauc
