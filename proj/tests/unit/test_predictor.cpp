#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "fixtures.hpp"
#include "gauc/error.hpp"
#include "gauc/predictor.hpp"

using namespace gauc;

namespace {

// Two classes on a line; train rows 0-3, probes 4-7.
LabeledDataset line() {
  return fixture::dataset({{-2, 0}, {-1.8, 0}, {2, 0}, {2.2, 0}, {-2.1, 0.1}, {1.9, -0.1}, {0.2, 0}, {-0.3, 0}},
                          {0, 0, 1, 1, 0, 1, 1, 0},
                          {Split::kTrain, Split::kTrain, Split::kTrain, Split::kTrain, Split::kProbe, Split::kProbe,
                           Split::kProbe, Split::kProbe},
                          2);
}

double logsumexp(const ClassLogProbs& p) {
  double m = *std::max_element(p.values().begin(), p.values().end());
  double s = 0.0;
  for (double v : p.values()) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

TEST_CASE("config and log-prob validation") {
  CHECK_THROWS_AS(PredictorConfig(0.0), ConfigError);
  CHECK_THROWS_AS(PredictorConfig{HUGE_VAL}, ConfigError);
  CHECK_THROWS_AS(PredictorConfig(1.0, -0.1), ConfigError);
  CHECK_THROWS_AS(ClassLogProbs({std::log(0.5), std::log(0.6)}), DataError);
  CHECK_THROWS_AS(ClassLogProbs({}), ShapeError);
  const ClassLogProbs p({std::log(0.25), std::log(0.5), std::log(0.25)});
  CHECK(p.argmax() == 1);
  CHECK(p.max_prob() == doctest::Approx(0.5));
  CHECK(ClassLogProbs({std::log(0.5), std::log(0.5)}).argmax() == 0);
}

TEST_CASE("prompt coupling pads and truncates") {
  const std::vector<float> p{1, 2, 3};
  CHECK(couple_prompt(std::span<const float>(p), 2) == Eigen::Vector2d(1, 2));
  const auto padded = couple_prompt(std::span<const float>(p), 5);
  CHECK(padded.size() == 5);
  CHECK(padded(2) == 3.0);
  CHECK(padded(4) == 0.0);
}

TEST_CASE("predict") {
  const auto ds = line();
  const Coreset core(ds, {0, 2}, 1);
  const std::vector<float> no_prompt{0, 0, 0};
  const PredictorConfig cfg(1.0, 0.0);

  const auto at0 = predict(ds.embeddings().row(0), core, ds, no_prompt, cfg);
  CHECK(at0.argmax() == 0);
  CHECK(std::abs(logsumexp(at0)) < 1e-12);

  const std::vector<float> middle{0, 0};
  const auto mid = predict(middle, core, ds, no_prompt, cfg);
  CHECK(mid[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  CHECK(mid[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  const auto flat = predict(ds.embeddings().row(0), core, ds, no_prompt, PredictorConfig(1e7, 0.0));
  CHECK(std::abs(flat[0] + std::log(2.0)) < 1e-3);

  // a strong prompt pushes every query toward class 1
  const std::vector<float> push{4, 0, 0};
  CHECK(predict(ds.embeddings().row(0), core, ds, push, PredictorConfig(1.0, 1.0)).argmax() == 1);

  // temperature scaling equals distance scaling
  const Eigen::MatrixXd protos = class_prototypes(core, ds);
  const Eigen::VectorXd q = ds.embeddings().row_vector(6);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  const auto hot = predict_with_prototypes(q * std::sqrt(3.0), protos * std::sqrt(3.0), zero, PredictorConfig(3.0, 0.0));
  const auto cold = predict_with_prototypes(q, protos, zero, PredictorConfig(1.0, 0.0));
  CHECK(hot[0] == doctest::Approx(cold[0]).epsilon(1e-12));

  const auto batch = predict_batch(ds.embeddings().to_eigen(), protos, zero, cfg);
  CHECK(batch.size() == 8);
  CHECK(batch[6][1] == doctest::Approx(predict(ds.embeddings().row(6), core, ds, no_prompt, cfg)[1]).epsilon(1e-14));
}

TEST_CASE("normalisation holds on random inputs") {
  std::mt19937_64 rng(2);
  const auto rows = fixture::random_rows(rng, 30, 5, 3.0);
  std::vector<int> labels(30);
  for (int i = 0; i < 30; ++i) labels[i] = i % 3;
  const auto ds = fixture::train_only(rows, labels, 3);
  const Coreset core(ds, {0, 1, 2, 3, 4, 5}, 2);
  const std::vector<float> prompt{0.5f, -1.0f};
  for (std::size_t i = 0; i < 30; ++i) {
    const auto p = predict(ds.embeddings().row(i), core, ds, prompt, PredictorConfig(0.05, 0.3));
    CHECK(std::abs(logsumexp(p)) < 1e-9);
  }
}

TEST_CASE("variance term") {
  CHECK(log_prob_variance(ClassLogProbs({std::log(0.9), std::log(0.1)})) == doctest::Approx(1.20695).epsilon(1e-5));
  const auto ds = line();
  const Coreset core(ds, {0, 2}, 1);
  const std::vector<float> prompt{0, 0};
  const std::vector<std::size_t> probes{4, 5, 6, 7};
  const PredictorConfig cfg(2.0, 0.0);
  const double v = variance_term(core, ds, probes, prompt, cfg);
  double manual = 0.0;
  for (auto i : probes) manual += log_prob_variance(predict(ds.embeddings().row(i), core, ds, prompt, cfg));
  CHECK(v == doctest::Approx(manual / 4.0).epsilon(1e-12));
  const std::vector<std::size_t> shuffled{7, 5, 4, 6};
  CHECK(variance_term(core, ds, shuffled, prompt, cfg) == doctest::Approx(v).epsilon(1e-14));
  CHECK(variance_term(core, ds, probes, prompt, PredictorConfig(1e9, 0.0)) < 1e-12);
  CHECK_THROWS_AS(variance_term(core, ds, std::vector<std::size_t>{}, prompt, cfg), ConfigError);
  CHECK_THROWS_AS(variance_term(core, ds, std::vector<std::size_t>{0}, prompt, cfg), ConfigError);
}

TEST_CASE("emid inputs") {
  const auto ds = line();
  const Coreset core(ds, {0, 2}, 1);
  const std::vector<std::size_t> probes{4, 5, 6, 7};

  SUBCASE("identical paraphrases") {
    const auto pr = fixture::prompts(3, 0.0);
    const auto terms = emid_terms(build_emid_inputs(core, ds, probes, pr, PredictorConfig(1.0, 0.3)));
    CHECK(terms.visual == 0.0);
    CHECK(terms.text == 0.0);
    CHECK(terms.response == terms.shifted);
  }
  SUBCASE("zero coupling keeps responses equal") {
    const auto pr = fixture::prompts(3, 2.0);
    const auto terms = emid_terms(build_emid_inputs(core, ds, probes, pr, PredictorConfig(1.0, 0.0)));
    CHECK(terms.text > 0.0);
    CHECK(terms.response == terms.shifted);
    const auto further = emid_terms(build_emid_inputs(core, ds, probes, fixture::prompts(3, 5.0), PredictorConfig(1.0, 0.0)));
    CHECK(further.response == terms.response);
  }
  SUBCASE("coupled shift separates the response terms") {
    const auto pr = fixture::prompts(3, 2.0);
    const auto terms = emid_terms(build_emid_inputs(core, ds, probes, pr, PredictorConfig(1.0, 0.5)));
    CHECK(terms.response != terms.shifted);
  }
  SUBCASE("too few probes") {
    CHECK_THROWS_AS(build_emid_inputs(core, ds, std::vector<std::size_t>{4}, fixture::prompts(3, 0.0), PredictorConfig()),
                    ConfigError);
  }
  SUBCASE("single-row prompt sets use a point summary") {
    const PromptEmbeddingSet one(EmbeddingMatrix::from_rows({{1, 0}}), EmbeddingMatrix::from_rows({{1, 0}}));
    const auto in = build_emid_inputs(core, ds, probes, one, PredictorConfig());
    CHECK(in.text_p.covariance()(0, 0) == kCovarianceFloor);
  }
}

TEST_CASE("perfect predictor has smaller response terms than a random one") {
  // probes sit exactly on the prototypes
  const auto ds = fixture::dataset({{-5, 0}, {5, 0}, {-5, 0}, {5, 0}, {-5, 0}, {5, 0}}, {0, 1, 0, 1, 0, 1},
                                   {Split::kTrain, Split::kTrain, Split::kProbe, Split::kProbe, Split::kProbe, Split::kProbe},
                                   2);
  const Coreset core(ds, {0, 1}, 1);
  const std::vector<std::size_t> probes{2, 3, 4, 5};
  const auto pr = fixture::prompts(2, 0.0);
  const auto good = emid_terms(build_emid_inputs(core, ds, probes, pr, PredictorConfig(0.5, 0.0)));
  const auto flat = emid_terms(build_emid_inputs(core, ds, probes, pr, PredictorConfig(1e6, 0.0)));
  CHECK(good.response < flat.response);
}

TEST_CASE("probe context agrees with the free functions") {
  const auto ds = line();
  const Coreset core(ds, {1, 3}, 1);
  const std::vector<std::size_t> probes{4, 5, 6, 7};
  const auto pr = fixture::prompts(2, 1.0);
  const PredictorConfig cfg(1.5, 0.3);
  const ProbeContext ctx(ds, probes, pr, cfg, kDefaultShrinkage);
  const auto protos = class_prototypes(core, ds);
  CHECK(emid_upper(ctx.emid_inputs(protos)) ==
        doctest::Approx(emid_upper(build_emid_inputs(core, ds, probes, pr, cfg))).epsilon(1e-12));
  std::vector<float> mean_prompt(2);
  for (int j = 0; j < 2; ++j) mean_prompt[j] = static_cast<float>(mean_row(pr.original)(j));
  CHECK(ctx.variance(protos) == doctest::Approx(variance_term(core, ds, probes, mean_prompt, cfg)).epsilon(1e-6));
}
