#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gauc/predictor.hpp"

namespace gauc {

struct AccuracyF1 {
  double accuracy;
  double macro_f1;
};

// Accuracy of argmax predictions and the unweighted mean of per-class F1 over
// the classes present in `labels`.
AccuracyF1 accuracy_f1(std::span<const ClassLogProbs> predictions, std::span<const int> labels);

// Mean negative log-probability of the true class.
double nll(std::span<const ClassLogProbs> predictions, std::span<const int> labels);

inline constexpr std::size_t kDefaultEceBins = 15;

// Expected calibration error over equal-width, right-closed confidence bins.
double ece(std::span<const ClassLogProbs> predictions, std::span<const int> labels,
           std::size_t bins = kDefaultEceBins);

// Mean over queries and classes of the population variance of p(y_k) across
// paraphrases. Outer index: paraphrase; inner: query.
double var_para(const std::vector<std::vector<ClassLogProbs>>& per_paraphrase);

// Mean over queries of the population variance of the top-1 probability
// across runs. Outer index: run; inner: query.
double var_runs(const std::vector<std::vector<ClassLogProbs>>& per_run);

struct ChairScores {
  double chairs;
  double chairi;
};

// Case-insensitive, word-boundary mention matching of vocabulary terms.
ChairScores chair(const std::vector<std::string>& responses,
                  const std::vector<std::vector<std::string>>& ground_truth_terms,
                  const std::vector<std::string>& vocabulary);

struct WilcoxonResult {
  double statistic;  // min(W+, W-)
  double p_value;    // two-sided
  std::size_t n;     // nonzero pairs
  bool exact;
};

inline constexpr std::size_t kWilcoxonExactMax = 12;

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences are
// dropped and tied |differences| share average ranks. Exact null
// distribution for n <= 12; otherwise a normal approximation with tie and
// continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace gauc
