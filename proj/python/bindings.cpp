#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gauc/embedding.hpp"
#include "gauc/error.hpp"
#include "gauc/gaussian.hpp"
#include "gauc/kernel.hpp"
#include "gauc/metrics.hpp"
#include "gauc/objective.hpp"
#include "gauc/pipeline.hpp"

namespace py = pybind11;
using namespace gauc;

namespace {

using RowMatrix = Eigen::MatrixXd;

EmbeddingMatrix to_matrix(const RowMatrix& a) { return EmbeddingMatrix::from_eigen(a); }

std::vector<ClassLogProbs> to_log_probs(const RowMatrix& a) {
  std::vector<ClassLogProbs> out;
  out.reserve(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(a.cols()));
    for (Eigen::Index j = 0; j < a.cols(); ++j) row[static_cast<std::size_t>(j)] = a(i, j);
    out.emplace_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<ClassLogProbs>> to_grid(const std::vector<RowMatrix>& sets) {
  std::vector<std::vector<ClassLogProbs>> out;
  for (const auto& s : sets) out.push_back(to_log_probs(s));
  return out;
}

GaussianSummary to_summary(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) { return {mean, cov, 2}; }

std::vector<std::string> paths(const std::vector<std::filesystem::path>& p) {
  std::vector<std::string> out;
  for (const auto& x : p) out.push_back(x.string());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coreset selection with MMD, EMID and predictive-variance terms";

  static py::exception<Error> base(m, "GaucError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<IndexError>(m, "IndexError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base.ptr());

  m.def("read_embeddings", [](const std::filesystem::path& p) { return read_embeddings(p).to_eigen(); },
        py::arg("path"));
  m.def(
      "write_embeddings",
      [](const std::filesystem::path& p, const RowMatrix& a) { write_embeddings(to_matrix(a), p); },
      py::arg("path"), py::arg("matrix"));

  m.def(
      "rbf_kernel",
      [](const std::vector<double>& a, const std::vector<double>& b, double sigma) {
        return rbf_kernel(std::span<const double>(a), std::span<const double>(b), KernelConfig(sigma));
      },
      py::arg("a"), py::arg("b"), py::arg("sigma"));
  m.def(
      "median_heuristic_sigma",
      [](const RowMatrix& x, std::size_t max_pairs, std::uint64_t seed) {
        return median_heuristic_sigma(to_matrix(x), max_pairs, seed);
      },
      py::arg("data"), py::arg("max_pairs") = kBandwidthPairs, py::arg("seed") = 0);
  m.def(
      "mmd_squared",
      [](const RowMatrix& full, const RowMatrix& subset, double sigma) {
        return mmd_squared(to_matrix(full), to_matrix(subset), KernelConfig(sigma));
      },
      py::arg("full"), py::arg("subset"), py::arg("sigma"));

  m.def(
      "summarize",
      [](const Eigen::MatrixXd& samples, double shrinkage) {
        const auto s = summarize(samples, shrinkage);
        return py::make_tuple(s.mean(), s.covariance());
      },
      py::arg("samples"), py::arg("shrinkage") = kDefaultShrinkage);
  m.def(
      "gaussian_kl",
      [](const Eigen::VectorXd& mp, const Eigen::MatrixXd& cp, const Eigen::VectorXd& mq, const Eigen::MatrixXd& cq) {
        return gaussian_kl(to_summary(mp, cp), to_summary(mq, cq));
      },
      py::arg("mean_p"), py::arg("cov_p"), py::arg("mean_q"), py::arg("cov_q"));
  m.def(
      "gaussian_js",
      [](const Eigen::VectorXd& mp, const Eigen::MatrixXd& cp, const Eigen::VectorXd& mq, const Eigen::MatrixXd& cq) {
        return gaussian_js(to_summary(mp, cp), to_summary(mq, cq));
      },
      py::arg("mean_p"), py::arg("cov_p"), py::arg("mean_q"), py::arg("cov_q"));

  m.def(
      "accuracy_f1",
      [](const RowMatrix& log_probs, const std::vector<int>& labels) {
        const auto r = accuracy_f1(to_log_probs(log_probs), labels);
        return py::make_tuple(r.accuracy, r.macro_f1);
      },
      py::arg("log_probs"), py::arg("labels"));
  m.def(
      "nll",
      [](const RowMatrix& log_probs, const std::vector<int>& labels) {
        return nll(to_log_probs(log_probs), labels);
      },
      py::arg("log_probs"), py::arg("labels"));
  m.def(
      "ece",
      [](const RowMatrix& log_probs, const std::vector<int>& labels, std::size_t bins) {
        return ece(to_log_probs(log_probs), labels, bins);
      },
      py::arg("log_probs"), py::arg("labels"), py::arg("bins") = kDefaultEceBins);
  m.def(
      "var_para", [](const std::vector<RowMatrix>& sets) { return var_para(to_grid(sets)); }, py::arg("per_paraphrase"));
  m.def(
      "var_runs", [](const std::vector<RowMatrix>& sets) { return var_runs(to_grid(sets)); }, py::arg("per_run"));
  m.def(
      "chair",
      [](const std::vector<std::string>& responses, const std::vector<std::vector<std::string>>& truth,
         const std::vector<std::string>& vocab) {
        const auto r = chair(responses, truth, vocab);
        return py::make_tuple(r.chairs, r.chairi);
      },
      py::arg("responses"), py::arg("ground_truth_terms"), py::arg("vocabulary"));
  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = wilcoxon_signed_rank(a, b);
        py::dict d;
        d["statistic"] = r.statistic;
        d["p_value"] = r.p_value;
        d["n"] = r.n;
        d["exact"] = r.exact;
        return d;
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "synth",
      [](const std::filesystem::path& out, std::size_t classes, std::size_t per_class, std::size_t dim,
         double separation, const std::vector<double>& imbalance, std::uint64_t seed, double paraphrase_noise) {
        SynthArgs args;
        args.data.classes = classes;
        args.data.per_class = per_class;
        args.data.dim = dim;
        args.data.separation = separation;
        args.data.imbalance = imbalance;
        args.data.seed = seed;
        args.prompts.paraphrase_noise = paraphrase_noise;
        args.prompts.seed = seed;
        args.out_dir = out;
        return paths(cmd_synth(args));
      },
      py::arg("out"), py::arg("classes") = 8, py::arg("per_class") = 200, py::arg("dim") = 32,
      py::arg("separation") = 3.0, py::arg("imbalance") = std::vector<double>{}, py::arg("seed") = 0,
      py::arg("paraphrase_noise") = 0.5);

  // Commands take the run configuration as JSON text; relative data paths
  // resolve against `base_dir`.
  auto load = [](const std::string& text, const std::filesystem::path& base_dir) {
    auto c = parse_run_config(text, base_dir);
    validate(c);
    return c;
  };
  m.def(
      "select", [load](const std::string& text, const std::filesystem::path& base) { return paths(cmd_select(load(text, base))); },
      py::arg("config_json"), py::arg("base_dir"));
  m.def(
      "evaluate", [load](const std::string& text, const std::filesystem::path& base) { return cmd_eval(load(text, base)).string(); },
      py::arg("config_json"), py::arg("base_dir"));
  m.def(
      "ablate", [load](const std::string& text, const std::filesystem::path& base) { return cmd_ablate(load(text, base)).string(); },
      py::arg("config_json"), py::arg("base_dir"));
}
