#include "gauc/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gauc/error.hpp"

namespace gauc {

PredictorConfig::PredictorConfig(double t, double coupling) : temperature(t), prompt_coupling(coupling) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be positive and finite");
  if (!(prompt_coupling >= 0.0) || !std::isfinite(prompt_coupling)) {
    throw ConfigError("prompt_coupling must be finite and >= 0");
  }
}

ClassLogProbs::ClassLogProbs(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ShapeError("ClassLogProbs needs at least one class");
  const double mx = *std::max_element(values_.begin(), values_.end());
  double s = 0.0;
  for (double v : values_) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  if (!(std::abs(lse) <= 1e-9)) throw DataError("log-probabilities are not normalised (logsumexp = " + std::to_string(lse) + ")");
}

double ClassLogProbs::prob(std::size_t k) const { return std::exp(values_[k]); }

std::size_t ClassLogProbs::argmax() const {
  return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

double ClassLogProbs::max_prob() const { return std::exp(values_[argmax()]); }

Eigen::VectorXd couple_prompt(std::span<const float> prompt, std::size_t dim) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  const std::size_t n = std::min(dim, prompt.size());
  for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = prompt[i];
  return out;
}

Eigen::VectorXd couple_prompt(const Eigen::VectorXd& prompt, std::size_t dim) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  const auto n = std::min<Eigen::Index>(static_cast<Eigen::Index>(dim), prompt.size());
  out.head(n) = prompt.head(n);
  return out;
}

Eigen::MatrixXd class_prototypes(const Coreset& coreset, const LabeledDataset& dataset) {
  const auto k = static_cast<Eigen::Index>(dataset.num_classes());
  const auto d = static_cast<Eigen::Index>(dataset.dim());
  Eigen::MatrixXd protos = Eigen::MatrixXd::Zero(k, d);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  const auto& emb = dataset.embeddings();
  for (std::size_t idx : coreset.indices()) {
    const auto c = static_cast<Eigen::Index>(dataset.label(idx));
    const auto r = emb.row(idx);
    for (Eigen::Index j = 0; j < d; ++j) protos(c, j) += r[static_cast<std::size_t>(j)];
    counts(c) += 1.0;
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts(c) == 0.0) throw ConfigError("class " + dataset.class_names()[static_cast<std::size_t>(c)] + " has no coreset member");
    protos.row(c) /= counts(c);
  }
  return protos;
}

namespace {

std::vector<double> log_softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  std::vector<double> out(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index k = 0; k < logits.size(); ++k) out[static_cast<std::size_t>(k)] = logits(k) - lse;
  return out;
}

}  // namespace

ClassLogProbs predict_with_prototypes(const Eigen::VectorXd& query, const Eigen::MatrixXd& prototypes,
                                      const Eigen::VectorXd& coupled_prompt, const PredictorConfig& config) {
  if (query.size() != prototypes.cols() || coupled_prompt.size() != query.size()) {
    throw ShapeError("query, prompt and prototype dims differ");
  }
  const Eigen::VectorXd effective = query + config.prompt_coupling * coupled_prompt;
  Eigen::VectorXd logits(prototypes.rows());
  for (Eigen::Index k = 0; k < prototypes.rows(); ++k) {
    logits(k) = -(effective - prototypes.row(k).transpose()).squaredNorm() / config.temperature;
  }
  return ClassLogProbs(log_softmax(logits));
}

ClassLogProbs predict(std::span<const float> query, const Coreset& coreset, const LabeledDataset& dataset,
                      std::span<const float> prompt, const PredictorConfig& config) {
  if (query.size() != dataset.dim()) throw ShapeError("query dim does not match dataset");
  Eigen::VectorXd q(static_cast<Eigen::Index>(query.size()));
  for (std::size_t i = 0; i < query.size(); ++i) q(static_cast<Eigen::Index>(i)) = query[i];
  return predict_with_prototypes(q, class_prototypes(coreset, dataset), couple_prompt(prompt, dataset.dim()), config);
}

std::vector<ClassLogProbs> predict_batch(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& prototypes,
                                         const Eigen::VectorXd& coupled_prompt, const PredictorConfig& config) {
  std::vector<ClassLogProbs> out;
  out.reserve(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    out.push_back(predict_with_prototypes(queries.row(i).transpose(), prototypes, coupled_prompt, config));
  }
  return out;
}

double log_prob_variance(const ClassLogProbs& p) {
  const auto v = p.values();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return var / static_cast<double>(v.size());
}

namespace {

Eigen::MatrixXd gather_rows(const LabeledDataset& dataset, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(dataset.dim()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto r = dataset.embeddings().row(idx[i]);
    for (std::size_t j = 0; j < dataset.dim(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  return out;
}

void check_probes(const LabeledDataset& dataset, std::span<const std::size_t> probe_indices) {
  if (probe_indices.empty()) throw ConfigError("probe set is empty");
  for (std::size_t idx : probe_indices) {
    if (idx >= dataset.rows()) throw IndexError("probe index " + std::to_string(idx) + " out of range");
    if (dataset.split(idx) != Split::kProbe) {
      throw ConfigError("row " + std::to_string(idx) + " is not in the probe split");
    }
  }
}

}  // namespace

double variance_term(const Coreset& coreset, const LabeledDataset& dataset, std::span<const std::size_t> probe_indices,
                     std::span<const float> prompt, const PredictorConfig& config) {
  check_probes(dataset, probe_indices);
  const auto protos = class_prototypes(coreset, dataset);
  const auto coupled = couple_prompt(prompt, dataset.dim());
  const auto preds = predict_batch(gather_rows(dataset, probe_indices), protos, coupled, config);
  double total = 0.0;
  for (const auto& p : preds) total += log_prob_variance(p);
  return total / static_cast<double>(preds.size());
}

Eigen::VectorXd mean_row(const EmbeddingMatrix& m) {
  if (m.rows() == 0) throw ConfigError("mean of an empty matrix");
  return m.to_eigen().colwise().mean().transpose();
}

GaussianSummary summarize_prompts(const EmbeddingMatrix& prompts, double shrinkage) {
  if (prompts.rows() == 1) return point_summary(prompts.row_vector(0));
  return summarize(prompts, shrinkage);
}

namespace {

GaussianSummary ideal_summary(const LabeledDataset& dataset, std::span<const std::size_t> probes, double shrinkage) {
  const auto k = static_cast<Eigen::Index>(dataset.num_classes());
  Eigen::MatrixXd ideal =
      Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(probes.size()), k, kIdealSmoothing / static_cast<double>(k));
  for (std::size_t i = 0; i < probes.size(); ++i) {
    ideal(static_cast<Eigen::Index>(i), dataset.label(probes[i])) += 1.0 - kIdealSmoothing;
  }
  return summarize(ideal, shrinkage);
}

}  // namespace

ProbeContext::ProbeContext(const LabeledDataset& dataset, std::vector<std::size_t> probe_indices,
                           const PromptEmbeddingSet& prompts, const PredictorConfig& config, double shrinkage)
    : probe_indices_((check_probes(dataset, probe_indices), std::move(probe_indices))),
      probes_(gather_rows(dataset, probe_indices_)),
      config_(config),
      shrinkage_(shrinkage),
      original_prompt_(couple_prompt(mean_row(prompts.original), dataset.dim())),
      paraphrase_prompt_(couple_prompt(mean_row(prompts.paraphrases), dataset.dim())),
      visual_(summarize(probes_, shrinkage)),
      text_p_(summarize_prompts(prompts.original, shrinkage)),
      text_q_(summarize_prompts(prompts.paraphrases, shrinkage)),
      ideal_(ideal_summary(dataset, probe_indices_, shrinkage)) {}

Eigen::MatrixXd ProbeContext::response_matrix(const Eigen::MatrixXd& prototypes, const Eigen::VectorXd& prompt) const {
  const auto preds = predict_batch(probes_, prototypes, prompt, config_);
  Eigen::MatrixXd out(probes_.rows(), prototypes.rows());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t k = 0; k < preds[i].size(); ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = preds[i].prob(k);
    }
  }
  return out;
}

EmidInputs ProbeContext::emid_inputs(const Eigen::MatrixXd& prototypes) const {
  return {visual_,
          visual_,
          text_p_,
          text_q_,
          summarize(response_matrix(prototypes, original_prompt_), shrinkage_),
          summarize(response_matrix(prototypes, paraphrase_prompt_), shrinkage_),
          ideal_};
}

double ProbeContext::variance(const Eigen::MatrixXd& prototypes) const {
  const auto preds = predict_batch(probes_, prototypes, original_prompt_, config_);
  double total = 0.0;
  for (const auto& p : preds) total += log_prob_variance(p);
  return total / static_cast<double>(preds.size());
}

EmidInputs build_emid_inputs(const Coreset& coreset, const LabeledDataset& dataset,
                             std::span<const std::size_t> probe_indices, const PromptEmbeddingSet& prompts,
                             const PredictorConfig& config, double shrinkage) {
  if (probe_indices.size() < 2) throw ConfigError("EMID needs at least 2 probe rows");
  ProbeContext ctx(dataset, {probe_indices.begin(), probe_indices.end()}, prompts, config, shrinkage);
  return ctx.emid_inputs(class_prototypes(coreset, dataset));
}

}  // namespace gauc
