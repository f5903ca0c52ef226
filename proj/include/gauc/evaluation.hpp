#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gauc/dataset.hpp"
#include "gauc/metrics.hpp"
#include "gauc/predictor.hpp"

namespace gauc {

// What the predictor is conditioned on at test time: one fixed coreset, or a
// fresh kNN coreset per test query.
struct Demonstrations {
  static Demonstrations fixed(Coreset coreset);
  static Demonstrations knn(std::size_t shots_per_class);

  std::optional<Coreset> coreset;
  std::size_t shots_per_class = 0;

  bool query_dependent() const { return !coreset.has_value(); }
};

// Metrics of one seeded run over the test split.
struct RunMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double nll = 0.0;
  double ece = 0.0;
  std::optional<double> var_para;  // needs >= 2 paraphrase rows
  double chairs = 0.0;
  double chairi = 0.0;
  // Test-split predictions under the mean original prompt.
  std::vector<ClassLogProbs> predictions;
};

// Template response the mock pipeline emits for a predicted class.
std::string mock_response(const std::string& class_name);

RunMetrics evaluate_run(const LabeledDataset& dataset, const PromptEmbeddingSet& prompts,
                        const PredictorConfig& config, const Demonstrations& demos,
                        std::size_t ece_bins = kDefaultEceBins);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(const std::vector<double>& values);

// "0.610 ± 0.030"
std::string format_mean_std(const MeanStd& m, int decimals = 3);

// Seed-level metric vectors and their aggregates for one method x shot row.
struct EvalSummary {
  std::vector<std::string> metric_names;              // order of `per_run` columns
  std::vector<std::vector<double>> per_run;           // [metric][run]
  std::vector<MeanStd> aggregate;                     // [metric]
  std::optional<double> var_runs;                     // needs >= 2 runs
};

EvalSummary summarize_runs(const std::vector<RunMetrics>& runs);

}  // namespace gauc
