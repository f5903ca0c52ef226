#include "gauc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <unordered_set>

#include "gauc/error.hpp"
#include "gauc/rng.hpp"

namespace gauc {

namespace {

template <typename A, typename B>
double squared_distance(std::span<const A> a, std::span<const B> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

double kernel_from_sq(double sq, double sigma) { return std::exp(-sq / (2.0 * sigma * sigma)); }

void check_mmd_inputs(const EmbeddingMatrix& full, const EmbeddingMatrix& subset) {
  if (full.dim() != subset.dim()) {
    throw ShapeError("dimension mismatch: " + std::to_string(full.dim()) + " vs " + std::to_string(subset.dim()));
  }
  if (full.rows() < 2 || subset.rows() < 2) throw ConfigError("MMD needs at least 2 rows in each set");
}

// Sum over ordered distinct pairs (i != j) of k(x_i, x_j).
double within_sum(const EmbeddingMatrix& x, double sigma) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double row = 0.0;
    const auto xi = x.row(i);
    for (std::size_t j = i + 1; j < x.rows(); ++j) row += kernel_from_sq(squared_distance(xi, x.row(j)), sigma);
    total += row;
  }
  return 2.0 * total;
}

}  // namespace

KernelConfig::KernelConfig(double s, BandwidthRule rule) : sigma(s), bandwidth_rule(rule) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("kernel sigma must be positive and finite");
}

double rbf_kernel(std::span<const float> a, std::span<const float> b, const KernelConfig& config) {
  if (a.size() != b.size()) throw ShapeError("rbf_kernel dimension mismatch");
  return kernel_from_sq(squared_distance(a, b), config.sigma);
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, const KernelConfig& config) {
  if (a.size() != b.size()) throw ShapeError("rbf_kernel dimension mismatch");
  return kernel_from_sq(squared_distance(a, b), config.sigma);
}

double median_heuristic_sigma(const EmbeddingMatrix& data, std::size_t max_pairs, std::uint64_t seed) {
  const std::size_t n = data.rows();
  if (n < 2) throw ConfigError("median heuristic needs at least 2 rows");
  if (max_pairs < 1) throw ConfigError("max_pairs must be >= 1");
  const std::size_t total_pairs = n * (n - 1) / 2;

  std::vector<double> dists;
  auto pair_distance = [&](std::size_t i, std::size_t j) {
    return std::sqrt(squared_distance(data.row(i), data.row(j)));
  };
  if (total_pairs <= max_pairs) {
    dists.reserve(total_pairs);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) dists.push_back(pair_distance(i, j));
  } else {
    auto rng = make_stream(seed, streams::kBandwidth);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::unordered_set<std::size_t> seen;
    dists.reserve(max_pairs);
    while (dists.size() < max_pairs) {
      std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (!seen.insert(i * n + j).second) continue;
      dists.push_back(pair_distance(i, j));
    }
  }
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  if (!(median > 0.0)) return 1.0;
  return median / std::sqrt(2.0);
}

double mmd_squared(const EmbeddingMatrix& full, const EmbeddingMatrix& subset, const KernelConfig& config) {
  check_mmd_inputs(full, subset);
  const auto n = static_cast<double>(full.rows());
  const auto m = static_cast<double>(subset.rows());
  const double ff = within_sum(full, config.sigma) / (n * (n - 1.0));
  const double dd = within_sum(subset, config.sigma) / (m * (m - 1.0));
  double cross = 0.0;
  for (std::size_t i = 0; i < full.rows(); ++i) {
    double row = 0.0;
    const auto xi = full.row(i);
    for (std::size_t j = 0; j < subset.rows(); ++j) row += kernel_from_sq(squared_distance(xi, subset.row(j)), config.sigma);
    cross += row;
  }
  return ff + dd - 2.0 * cross / (n * m);
}

MmdCache::MmdCache(const EmbeddingMatrix& full, const EmbeddingMatrix& coreset_rows, const KernelConfig& config)
    : config_(config), full_(full), full_rows_(full.rows()), dim_(full.dim()) {
  check_mmd_inputs(full, coreset_rows);
  const std::size_t m = coreset_rows.rows();
  members_.assign(coreset_rows.values().begin(), coreset_rows.values().end());
  sum_ff_ = within_sum(full_, config_.sigma);
  cross_sums_.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto u = coreset_rows.row(j);
    double s = 0.0;
    for (std::size_t i = 0; i < full_rows_; ++i) s += kernel_from_sq(squared_distance(full_.row(i), u), config_.sigma);
    cross_sums_[j] = s;
  }
  member_kernel_rows_.assign(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    member_kernel_rows_[a * m + a] = 1.0;
    for (std::size_t b = a + 1; b < m; ++b) {
      const double k = kernel_from_sq(squared_distance(coreset_rows.row(a), coreset_rows.row(b)), config_.sigma);
      member_kernel_rows_[a * m + b] = k;
      member_kernel_rows_[b * m + a] = k;
    }
  }
  for (std::size_t a = 0; a < m; ++a) sum_dd_ += member_row_sum(a);
}

double MmdCache::member_row_sum(std::size_t pos) const {
  const std::size_t m = members();
  double s = 0.0;
  for (std::size_t b = 0; b < m; ++b) {
    if (b != pos) s += member_kernel_rows_[pos * m + b];
  }
  return s;
}

double MmdCache::mmd_squared() const {
  const auto n = static_cast<double>(full_rows_);
  const auto m = static_cast<double>(members());
  double cross = 0.0;
  for (double c : cross_sums_) cross += c;
  return sum_ff_ / (n * (n - 1.0)) + sum_dd_ / (m * (m - 1.0)) - 2.0 * cross / (n * m);
}

MmdCache::SwapTerms MmdCache::score_swap(std::size_t out_member, std::span<const float> in_candidate,
                                         bool keep_row) const {
  const std::size_t m = members();
  if (out_member >= m) {
    throw IndexError("coreset position " + std::to_string(out_member) + " out of range [0, " +
                     std::to_string(m) + ")");
  }
  if (in_candidate.size() != dim_) throw ShapeError("swap candidate dimension mismatch");
  SwapTerms t{0.0, 0.0, {}};
  for (std::size_t i = 0; i < full_rows_; ++i) {
    t.cross += kernel_from_sq(squared_distance(full_.row(i), in_candidate), config_.sigma);
  }
  if (keep_row) t.row.assign(m, 0.0);
  for (std::size_t b = 0; b < m; ++b) {
    if (b == out_member) continue;
    const std::span<const float> ub(members_.data() + b * dim_, dim_);
    const double k = kernel_from_sq(squared_distance(in_candidate, ub), config_.sigma);
    t.row_sum_new += k;
    if (keep_row) t.row[b] = k;
  }
  return t;
}

double MmdCache::swap_delta(std::size_t out_member, std::span<const float> in_candidate) const {
  const auto terms = score_swap(out_member, in_candidate, false);
  const auto n = static_cast<double>(full_rows_);
  const auto m = static_cast<double>(members());
  const double dd_change = 2.0 * (terms.row_sum_new - member_row_sum(out_member));
  const double cross_change = terms.cross - cross_sums_[out_member];
  return dd_change / (m * (m - 1.0)) - 2.0 * cross_change / (n * m);
}

void MmdCache::apply_swap(std::size_t out_member, std::span<const float> in_candidate) {
  auto terms = score_swap(out_member, in_candidate, true);
  const std::size_t m = members();
  sum_dd_ += 2.0 * (terms.row_sum_new - member_row_sum(out_member));
  cross_sums_[out_member] = terms.cross;
  for (std::size_t b = 0; b < m; ++b) {
    if (b == out_member) continue;
    member_kernel_rows_[out_member * m + b] = terms.row[b];
    member_kernel_rows_[b * m + out_member] = terms.row[b];
  }
  std::copy(in_candidate.begin(), in_candidate.end(), members_.begin() + static_cast<std::ptrdiff_t>(out_member * dim_));
}

}  // namespace gauc
