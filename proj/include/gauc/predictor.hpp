#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gauc/dataset.hpp"
#include "gauc/gaussian.hpp"

namespace gauc {

struct PredictorConfig {
  explicit PredictorConfig(double temperature = 4.0, double prompt_coupling = 0.3);

  double temperature;
  double prompt_coupling;
};

// Normalised class log-probabilities.
class ClassLogProbs {
 public:
  explicit ClassLogProbs(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double prob(std::size_t k) const;
  // Lowest class id among the maxima.
  std::size_t argmax() const;
  double max_prob() const;

 private:
  std::vector<double> values_;
};

// Label smoothing applied to the ideal-response vectors.
inline constexpr double kIdealSmoothing = 0.05;

// Prompt vector truncated or zero-padded to `dim`.
Eigen::VectorXd couple_prompt(std::span<const float> prompt, std::size_t dim);
Eigen::VectorXd couple_prompt(const Eigen::VectorXd& prompt, std::size_t dim);

// Per-class mean embedding of the coreset members (K x dim).
Eigen::MatrixXd class_prototypes(const Coreset& coreset, const LabeledDataset& dataset);

// log-softmax(-||query + coupling * prompt - prototype_k||^2 / temperature).
// `coupled_prompt` must already have the embedding dim.
ClassLogProbs predict_with_prototypes(const Eigen::VectorXd& query, const Eigen::MatrixXd& prototypes,
                                      const Eigen::VectorXd& coupled_prompt, const PredictorConfig& config);

ClassLogProbs predict(std::span<const float> query, const Coreset& coreset, const LabeledDataset& dataset,
                      std::span<const float> prompt, const PredictorConfig& config);

// Batch prediction: one row of `queries` per item.
std::vector<ClassLogProbs> predict_batch(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& prototypes,
                                         const Eigen::VectorXd& coupled_prompt, const PredictorConfig& config);

// Population variance across classes of the log-probabilities.
double log_prob_variance(const ClassLogProbs& p);

// Mean over probes of log_prob_variance.
double variance_term(const Coreset& coreset, const LabeledDataset& dataset, std::span<const std::size_t> probe_indices,
                     std::span<const float> prompt, const PredictorConfig& config);

Eigen::VectorXd mean_row(const EmbeddingMatrix& m);

// Summary of a prompt matrix; a single row gets floor * I covariance.
GaussianSummary summarize_prompts(const EmbeddingMatrix& prompts, double shrinkage);

// Everything the EMID and variance terms need that does not depend on the
// coreset, computed once: probe rows, their labels, the coupled mean prompts,
// and the visual, text and ideal-response summaries.
class ProbeContext {
 public:
  ProbeContext(const LabeledDataset& dataset, std::vector<std::size_t> probe_indices,
               const PromptEmbeddingSet& prompts, const PredictorConfig& config, double shrinkage);

  EmidInputs emid_inputs(const Eigen::MatrixXd& prototypes) const;
  double variance(const Eigen::MatrixXd& prototypes) const;

  const std::vector<std::size_t>& probe_indices() const { return probe_indices_; }
  const Eigen::VectorXd& original_prompt() const { return original_prompt_; }
  const Eigen::VectorXd& paraphrase_prompt() const { return paraphrase_prompt_; }
  const PredictorConfig& config() const { return config_; }
  double shrinkage() const { return shrinkage_; }

 private:
  Eigen::MatrixXd response_matrix(const Eigen::MatrixXd& prototypes, const Eigen::VectorXd& prompt) const;

  std::vector<std::size_t> probe_indices_;
  Eigen::MatrixXd probes_;
  PredictorConfig config_;
  double shrinkage_;
  Eigen::VectorXd original_prompt_;
  Eigen::VectorXd paraphrase_prompt_;
  GaussianSummary visual_;
  GaussianSummary text_p_;
  GaussianSummary text_q_;
  GaussianSummary ideal_;
};

EmidInputs build_emid_inputs(const Coreset& coreset, const LabeledDataset& dataset,
                             std::span<const std::size_t> probe_indices, const PromptEmbeddingSet& prompts,
                             const PredictorConfig& config, double shrinkage = kDefaultShrinkage);

}  // namespace gauc
