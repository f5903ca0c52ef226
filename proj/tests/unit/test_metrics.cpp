#include <cmath>
#include <random>

#include <doctest.h>

#include "gauc/error.hpp"
#include "gauc/metrics.hpp"
#include "oracles.hpp"

using namespace gauc;

namespace {

ClassLogProbs probs(std::vector<double> p) {
  for (auto& v : p) v = std::log(v);
  return ClassLogProbs(p);
}

// Binary prediction with confidence `c` on class `k`.
ClassLogProbs binary(int k, double c) { return k == 0 ? probs({c, 1.0 - c}) : probs({1.0 - c, c}); }

}  // namespace

TEST_CASE("accuracy and macro f1") {
  const std::vector<ClassLogProbs> p{binary(1, 0.9), binary(1, 0.8)};
  const std::vector<int> y{1, 0};
  const auto r = accuracy_f1(p, y);
  CHECK(r.accuracy == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const std::vector<int> y2{1, 1};
  CHECK(accuracy_f1(p, y2).accuracy == 1.0);
  CHECK(accuracy_f1(p, y2).macro_f1 == 1.0);

  // relabel both sides
  const std::vector<ClassLogProbs> swapped{binary(0, 0.9), binary(0, 0.8)};
  const std::vector<int> ys{0, 1};
  CHECK(accuracy_f1(swapped, ys).macro_f1 == doctest::Approx(r.macro_f1).epsilon(1e-15));
  CHECK_THROWS_AS(accuracy_f1(p, std::vector<int>{1}), ShapeError);
}

TEST_CASE("nll") {
  const std::vector<ClassLogProbs> p{probs({0.5, 0.5}), probs({0.25, 0.75})};
  const std::vector<int> y{0, 0};
  CHECK(nll(p, y) == doctest::Approx(1.039721).epsilon(1e-6));
  CHECK(std::abs(nll(p, y) - 0.5 * (std::log(2.0) + std::log(4.0))) < 1e-12);
  const std::vector<ClassLogProbs> u{probs({1.0 / 3, 1.0 / 3, 1.0 / 3})};
  CHECK(nll(u, std::vector<int>{2}) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(nll(std::vector<ClassLogProbs>{ClassLogProbs({0.0, -1e300})}, std::vector<int>{0}) == 0.0);
}

TEST_CASE("ece") {
  const std::vector<ClassLogProbs> sure{ClassLogProbs({0.0, -INFINITY}), ClassLogProbs({0.0, -INFINITY})};
  CHECK(ece(sure, std::vector<int>{0, 0}) == 0.0);
  CHECK(std::abs(ece(sure, std::vector<int>{0, 1}) - 0.5) < 1e-12);

  // calibrated: 10 items at confidence 0.7 with 7 correct
  std::vector<ClassLogProbs> cal;
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    cal.push_back(binary(0, 0.7));
    y.push_back(i < 7 ? 0 : 1);
  }
  CHECK(ece(cal, y) < 1e-12);

  // one bin: |accuracy - mean confidence|
  const std::vector<ClassLogProbs> mix{binary(0, 0.6), binary(1, 0.9), binary(0, 0.55)};
  const std::vector<int> ym{0, 0, 0};
  CHECK(ece(mix, ym, 1) == doctest::Approx(std::abs(2.0 / 3.0 - (0.6 + 0.9 + 0.55) / 3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(ece(mix, ym, 0), ConfigError);
}

TEST_CASE("var para and var runs") {
  const std::vector<std::vector<ClassLogProbs>> two{{probs({0.8, 0.2})}, {probs({0.6, 0.4})}};
  CHECK(std::abs(var_para(two) - 0.01) < 1e-12);
  const std::vector<std::vector<ClassLogProbs>> rev{two[1], two[0]};
  CHECK(var_para(rev) == var_para(two));
  CHECK(var_para({two[0], two[0]}) == 0.0);
  CHECK_THROWS_AS(var_para({two[0]}), ShapeError);
  CHECK_THROWS_AS(var_para({two[0], {}}), ShapeError);

  const std::vector<std::vector<ClassLogProbs>> runs{{probs({0.9, 0.1})}, {probs({0.3, 0.7})}};
  CHECK(std::abs(var_runs(runs) - 0.01) < 1e-12);
  auto three = runs;
  three.push_back(runs[0]);
  // top-1 values {0.9, 0.7, 0.9}
  const double m = (0.9 + 0.7 + 0.9) / 3.0;
  const double want = ((0.9 - m) * (0.9 - m) * 2 + (0.7 - m) * (0.7 - m)) / 3.0;
  CHECK(var_runs(three) == doctest::Approx(want).epsilon(1e-12));
  CHECK(var_runs({runs[0], runs[0]}) == 0.0);
}

TEST_CASE("chair") {
  const std::vector<std::string> vocab{"tumor", "mucus"};
  const auto r = chair({"tumor and mucus"}, {{"tumor"}}, vocab);
  CHECK(r.chairs == 1.0);
  CHECK(r.chairi == 0.5);
  const auto none = chair({"nothing here"}, {{"tumor"}}, vocab);
  CHECK(none.chairs == 0.0);
  CHECK(none.chairi == 0.0);
  const auto ok = chair({"Tumor.", "a MUCUS sample"}, {{"tumor"}, {"mucus"}}, vocab);
  CHECK(ok.chairs == 0.0);
  CHECK(ok.chairi == 0.0);
  // word boundaries
  const auto sub = chair({"tumorous mucusy"}, {{}}, vocab);
  CHECK(sub.chairi == 0.0);
  const auto multi = chair({"normal tissue", ""}, {{"normal"}, {}}, {"normal", "normal tissue"});
  CHECK(multi.chairs == 0.5);
  CHECK(multi.chairi == 0.5);
}

TEST_CASE("chair agrees with a brute-force scanner") {
  std::mt19937_64 rng(6);
  const std::vector<std::string> vocab{"tumor", "stroma", "debris", "normal", "fat"};
  const std::vector<std::string> filler{"the", "tumors", "Stroma,", "and", "DEBRIS", "fatty", "normal.", "x", "fat"};
  std::uniform_int_distribution<std::size_t> pick(0, filler.size() - 1), len(0, 8), vpick(0, vocab.size() - 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::string> responses;
    std::vector<std::vector<std::string>> truth;
    for (int i = 0; i < 6; ++i) {
      std::string s;
      for (std::size_t w = 0, n = len(rng); w < n; ++w) s += filler[pick(rng)] + (w % 3 ? " " : "-");
      responses.push_back(s);
      truth.push_back({vocab[vpick(rng)], vocab[vpick(rng)]});
    }
    const auto got = chair(responses, truth, vocab);
    const auto want = oracle::chair_scan(responses, truth, vocab);
    CHECK(got.chairs == doctest::Approx(want.chairs).epsilon(1e-15));
    CHECK(got.chairi == doctest::Approx(want.chairi).epsilon(1e-15));
  }
}

TEST_CASE("wilcoxon") {
  const std::vector<double> a{2, 3, 4, 5, 6}, b{1, 1, 1, 1, 1};
  const auto r = wilcoxon_signed_rank(a, b);
  CHECK(r.statistic == 0.0);
  CHECK(r.exact);
  CHECK(std::abs(r.p_value - 0.0625) < 1e-12);
  CHECK(wilcoxon_signed_rank(b, a).p_value == r.p_value);
  CHECK_THROWS_AS(wilcoxon_signed_rank(a, a), InsufficientDataError);
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{1, 2, 3, 4}, std::vector<double>{0, 0, 0, 0}),
                  InsufficientDataError);
  CHECK_THROWS_AS(wilcoxon_signed_rank(a, std::vector<double>{1}), ShapeError);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.2, 1.0);
  std::uniform_int_distribution<int> coarse(-3, 3);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 5 + static_cast<std::size_t>(t % 8);
    std::vector<double> x(n), y(n, 0.0);
    // alternate continuous and tie-heavy integer data
    for (auto& v : x) v = t % 2 ? g(rng) : static_cast<double>(coarse(rng));
    try {
      const auto w = wilcoxon_signed_rank(x, y);
      CHECK(w.p_value == doctest::Approx(oracle::wilcoxon_exact_p(x, y)).epsilon(1e-12));
    } catch (const InsufficientDataError&) {
    }
  }
}

TEST_CASE("wilcoxon normal approximation tracks the exact distribution") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(0.3, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(13), y(13, 0.0);
    for (auto& v : x) v = g(rng);
    const auto approx = wilcoxon_signed_rank(x, y);
    CHECK_FALSE(approx.exact);
    CHECK(std::abs(approx.p_value - oracle::wilcoxon_exact_p(x, y)) <= 0.03);
  }
}
