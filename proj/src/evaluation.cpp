#include "gauc/evaluation.hpp"

#include <cmath>
#include <cstdio>

#include "gauc/baselines.hpp"
#include "gauc/error.hpp"

namespace gauc {

Demonstrations Demonstrations::fixed(Coreset coreset) {
  Demonstrations d;
  d.shots_per_class = coreset.shots_per_class();
  d.coreset = std::move(coreset);
  return d;
}

Demonstrations Demonstrations::knn(std::size_t shots_per_class) {
  Demonstrations d;
  d.shots_per_class = shots_per_class;
  return d;
}

std::string mock_response(const std::string& class_name) { return "this tissue is " + class_name; }

RunMetrics evaluate_run(const LabeledDataset& dataset, const PromptEmbeddingSet& prompts,
                        const PredictorConfig& config, const Demonstrations& demos, std::size_t ece_bins) {
  const auto& test = dataset.rows_in(Split::kTest);
  if (test.empty()) throw ConfigError("dataset has no test rows");
  const auto& emb = dataset.embeddings();
  const std::size_t d = dataset.dim();

  const Eigen::VectorXd original = couple_prompt(mean_row(prompts.original), d);
  std::vector<Eigen::VectorXd> paraphrases;
  for (std::size_t p = 0; p < prompts.paraphrases.rows(); ++p) {
    paraphrases.push_back(couple_prompt(prompts.paraphrases.row(p), d));
  }

  std::optional<Eigen::MatrixXd> fixed_protos;
  if (!demos.query_dependent()) fixed_protos = class_prototypes(*demos.coreset, dataset);

  RunMetrics out;
  std::vector<int> labels;
  std::vector<std::vector<ClassLogProbs>> per_para(paraphrases.size());
  std::vector<std::string> responses;
  std::vector<std::vector<std::string>> truths;
  for (std::size_t idx : test) {
    const Eigen::VectorXd q = emb.row_vector(idx);
    const Eigen::MatrixXd protos =
        fixed_protos ? *fixed_protos
                     : class_prototypes(select_knn(dataset, emb.row(idx), demos.shots_per_class), dataset);
    out.predictions.push_back(predict_with_prototypes(q, protos, original, config));
    for (std::size_t p = 0; p < paraphrases.size(); ++p) {
      per_para[p].push_back(predict_with_prototypes(q, protos, paraphrases[p], config));
    }
    labels.push_back(dataset.label(idx));
    responses.push_back(mock_response(dataset.class_names()[out.predictions.back().argmax()]));
    truths.push_back({dataset.class_names()[static_cast<std::size_t>(dataset.label(idx))]});
  }

  const auto af = accuracy_f1(out.predictions, labels);
  out.accuracy = af.accuracy;
  out.macro_f1 = af.macro_f1;
  out.nll = nll(out.predictions, labels);
  out.ece = ece(out.predictions, labels, ece_bins);
  if (per_para.size() >= 2) out.var_para = var_para(per_para);
  const auto ch = chair(responses, truths, dataset.class_names());
  out.chairs = ch.chairs;
  out.chairi = ch.chairi;
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

std::string format_mean_std(const MeanStd& m, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f ± %.*f", decimals, m.mean, decimals, m.std);
  return buf;
}

EvalSummary summarize_runs(const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw ConfigError("no runs to summarize");
  EvalSummary s;
  s.metric_names = {"accuracy", "macro_f1", "nll", "ece", "chairs", "chairi"};
  const bool has_para = runs.front().var_para.has_value();
  if (has_para) s.metric_names.push_back("var_para");
  s.per_run.assign(s.metric_names.size(), {});
  for (const auto& r : runs) {
    s.per_run[0].push_back(r.accuracy);
    s.per_run[1].push_back(r.macro_f1);
    s.per_run[2].push_back(r.nll);
    s.per_run[3].push_back(r.ece);
    s.per_run[4].push_back(r.chairs);
    s.per_run[5].push_back(r.chairi);
    if (has_para) s.per_run[6].push_back(r.var_para.value_or(0.0));
  }
  for (const auto& col : s.per_run) s.aggregate.push_back(mean_std(col));
  if (runs.size() >= 2) {
    std::vector<std::vector<ClassLogProbs>> preds;
    for (const auto& r : runs) preds.push_back(r.predictions);
    s.var_runs = var_runs(preds);
  }
  return s;
}

}  // namespace gauc
