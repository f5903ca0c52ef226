#include "gauc/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "gauc/error.hpp"
#include "gauc/rng.hpp"

namespace gauc {

ObjectiveWeights::ObjectiveWeights(double a, double b) : alpha(a), beta(b) {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw ConfigError("objective weights must be finite and >= 0");
  }
}

std::vector<std::size_t> select_probes(const LabeledDataset& dataset, std::size_t cap, std::uint64_t seed) {
  const auto& probes = dataset.rows_in(Split::kProbe);
  if (cap == 0) throw ConfigError("probe cap must be >= 1");
  if (probes.size() <= cap) return probes;

  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
  for (std::size_t idx : probes) by_class[static_cast<std::size_t>(dataset.label(idx))].push_back(idx);

  // Largest-remainder allocation of `cap` slots proportional to class size.
  const auto total = static_cast<double>(probes.size());
  std::vector<std::size_t> quota(by_class.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const double exact = static_cast<double>(cap) * static_cast<double>(by_class[c].size()) / total;
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < cap; ++i, ++assigned) ++quota[remainders[i % remainders.size()].second];

  auto rng = make_stream(seed, streams::kProbe);
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto rows = by_class[c];
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(std::min(quota[c], rows.size()));
    out.insert(out.end(), rows.begin(), rows.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

EmbeddingMatrix l2_normalized(const EmbeddingMatrix& m) {
  std::vector<float> v(m.values().begin(), m.values().end());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < m.dim(); ++j) norm += static_cast<double>(v[i * m.dim() + j]) * v[i * m.dim() + j];
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (std::size_t j = 0; j < m.dim(); ++j) v[i * m.dim() + j] = static_cast<float>(v[i * m.dim() + j] / norm);
  }
  return {m.rows(), m.dim(), std::move(v)};
}

namespace {

KernelConfig resolve_kernel(const EmbeddingMatrix& reference, const std::optional<KernelConfig>& kernel) {
  if (kernel && kernel->bandwidth_rule == BandwidthRule::kFixed) return *kernel;
  // The bandwidth is a property of the dataset, not of the run seed.
  return KernelConfig(median_heuristic_sigma(reference, kBandwidthPairs, 0), BandwidthRule::kMedianHeuristic);
}

}  // namespace

EvaluationContext::EvaluationContext(const LabeledDataset& dataset, const PromptEmbeddingSet& prompts,
                                     const PredictorConfig& predictor, std::vector<std::size_t> probe_indices,
                                     std::optional<KernelConfig> kernel, double shrinkage, bool l2_normalize)
    : dataset_(&dataset),
      mmd_rows_(l2_normalize ? l2_normalized(dataset.embeddings()) : dataset.embeddings()),
      reference_(mmd_rows_.select_rows(dataset.rows_in(Split::kTrain))),
      kernel_(resolve_kernel(reference_, kernel)),
      probes_(dataset, std::move(probe_indices), prompts, predictor, shrinkage) {}

namespace {

double weighted(double mmd2, double emid, double var, const ObjectiveWeights& w) {
  return mmd2 + w.alpha * emid + w.beta * var;
}

}  // namespace

ObjectiveValue objective(const Coreset& coreset, const EvaluationContext& context, const ObjectiveWeights& weights) {
  const auto& ds = context.dataset();
  const double mmd2 = mmd_squared(context.reference(), context.mmd_rows(coreset.indices()), context.kernel());
  const auto protos = class_prototypes(coreset, ds);
  const double emid = emid_upper(context.probes().emid_inputs(protos));
  const double var = context.probes().variance(protos);
  return {weighted(mmd2, emid, var, weights), mmd2, emid, var};
}

Coreset initial_coreset(const LabeledDataset& dataset, std::size_t shots_per_class, std::uint64_t seed) {
  if (shots_per_class == 0) throw ConfigError("shots_per_class must be >= 1");
  auto rng = make_stream(seed, streams::kInit);
  std::vector<std::size_t> indices;
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    auto pool = dataset.train_rows_of(static_cast<int>(c));
    if (pool.size() < shots_per_class) {
      throw ConfigError("class " + dataset.class_names()[c] + " has " + std::to_string(pool.size()) +
                        " train rows, fewer than " + std::to_string(shots_per_class) + " shots");
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    indices.insert(indices.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(shots_per_class));
  }
  return {dataset, std::move(indices), shots_per_class};
}

SelectionResult greedy_select(const EvaluationContext& context, std::size_t shots_per_class, std::size_t iterations,
                              const ObjectiveWeights& weights, std::uint64_t seed, std::optional<Coreset> start) {
  const auto& ds = context.dataset();
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    if (ds.train_rows_of(static_cast<int>(c)).size() <= shots_per_class) {
      throw ConfigError("class " + ds.class_names()[c] + " needs more than " + std::to_string(shots_per_class) +
                        " train rows for swap search");
    }
  }
  Coreset coreset = start ? *start : initial_coreset(ds, shots_per_class, seed);
  if (coreset.shots_per_class() != shots_per_class) throw ConfigError("start coreset has a different shot count");

  std::vector<std::size_t> members(coreset.indices().begin(), coreset.indices().end());
  std::unordered_set<std::size_t> member_set(members.begin(), members.end());
  MmdCache cache(context.reference(), context.mmd_rows(members), context.kernel());

  const bool use_emid = weights.alpha > 0.0;
  const bool use_var = weights.beta > 0.0;
  const auto& probes = context.probes();
  Eigen::MatrixXd protos = class_prototypes(coreset, ds);
  auto regularizers = [&](const Eigen::MatrixXd& p) {
    return std::pair{use_emid ? emid_upper(probes.emid_inputs(p)) : 0.0, use_var ? probes.variance(p) : 0.0};
  };

  double mmd2 = cache.mmd_squared();
  auto [emid, var] = regularizers(protos);
  double total = weighted(mmd2, emid, var, weights);

  SelectionResult result{coreset, {}, {}, 0, seed, weights, iterations};
  result.objective_trace.reserve(iterations + 1);
  result.objective_trace.push_back(total);

  auto rng = make_stream(seed, streams::kProposals);
  std::uniform_int_distribution<std::size_t> pick_pos(0, members.size() - 1);
  const auto& emb = ds.embeddings();
  const double inv_shots = 1.0 / static_cast<double>(shots_per_class);

  for (std::size_t it = 0; it < iterations; ++it) {
    const std::size_t pos = pick_pos(rng);
    const std::size_t out_row = members[pos];
    const int cls = ds.label(out_row);
    const auto& pool = ds.train_rows_of(cls);
    std::uniform_int_distribution<std::size_t> pick_row(0, pool.size() - 1);
    std::size_t in_row = pool[pick_row(rng)];
    while (member_set.count(in_row) != 0) in_row = pool[pick_row(rng)];

    const double cand_mmd2 = mmd2 + cache.swap_delta(pos, context.mmd_row(in_row));
    double cand_emid = 0.0;
    double cand_var = 0.0;
    Eigen::MatrixXd cand_protos;
    if (use_emid || use_var) {
      cand_protos = protos;
      const auto a = emb.row(in_row);
      const auto b = emb.row(out_row);
      for (std::size_t j = 0; j < ds.dim(); ++j) {
        cand_protos(cls, static_cast<Eigen::Index>(j)) += (static_cast<double>(a[j]) - b[j]) * inv_shots;
      }
      std::tie(cand_emid, cand_var) = regularizers(cand_protos);
    }
    const double cand_total = weighted(cand_mmd2, cand_emid, cand_var, weights);

    if (cand_total < total - 1e-12) {
      cache.apply_swap(pos, context.mmd_row(in_row));
      member_set.erase(out_row);
      member_set.insert(in_row);
      members[pos] = in_row;
      mmd2 = cache.mmd_squared();
      if (use_emid || use_var) {
        coreset = Coreset(ds, members, shots_per_class);
        protos = class_prototypes(coreset, ds);
        std::tie(emid, var) = regularizers(protos);
      }
      total = weighted(mmd2, emid, var, weights);
      ++result.accepted_swaps;
    }
    result.objective_trace.push_back(total);
  }

  result.coreset = Coreset(ds, members, shots_per_class);
  protos = class_prototypes(result.coreset, ds);
  const double final_emid = emid_upper(probes.emid_inputs(protos));
  const double final_var = probes.variance(protos);
  result.terms = {weighted(mmd2, final_emid, final_var, weights), mmd2, final_emid, final_var};
  return result;
}

std::vector<SelectionResult> ablate(const EvaluationContext& context, const std::vector<ObjectiveWeights>& grid,
                                    std::size_t shots_per_class, std::size_t iterations, std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("ablation grid is empty");
  const Coreset start = initial_coreset(context.dataset(), shots_per_class, seed);
  std::vector<SelectionResult> out;
  out.reserve(grid.size());
  for (const auto& w : grid) out.push_back(greedy_select(context, shots_per_class, iterations, w, seed, start));
  return out;
}

}  // namespace gauc
