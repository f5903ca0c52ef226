#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "fixtures.hpp"
#include "gauc/error.hpp"
#include "gauc/kernel.hpp"
#include "oracles.hpp"

using namespace gauc;

TEST_CASE("rbf kernel values") {
  const KernelConfig k(1.5);
  const std::vector<float> a{0.5f, -1.0f};
  CHECK(rbf_kernel(std::span<const float>(a), std::span<const float>(a), k) == 1.0);
  const std::vector<double> z{0.0}, s{1.5 * std::sqrt(2.0)};
  CHECK(rbf_kernel(std::span<const double>(z), std::span<const double>(s), k) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  const std::vector<float> b{1.0f, 2.0f};
  CHECK(rbf_kernel(std::span<const float>(a), std::span<const float>(b), k) ==
        rbf_kernel(std::span<const float>(b), std::span<const float>(a), k));
  const std::vector<float> c{1.0f};
  CHECK_THROWS_AS(rbf_kernel(std::span<const float>(a), std::span<const float>(c), k), ShapeError);
  CHECK_THROWS_AS(KernelConfig(0.0), ConfigError);
  CHECK_THROWS_AS(KernelConfig{std::nan("")}, ConfigError);
  CHECK_THROWS_AS(KernelConfig{std::numeric_limits<double>::infinity()}, ConfigError);
}

TEST_CASE("kernel positivity") {
  std::mt19937_64 rng(1);
  const KernelConfig k(0.7);
  for (int t = 0; t < 200; ++t) {
    auto r = fixture::random_rows(rng, 2, 3);
    const double v = rbf_kernel(std::span<const double>(r[0]), std::span<const double>(r[1]), k);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("median heuristic") {
  CHECK(median_heuristic_sigma(EmbeddingMatrix::from_rows({{0, 0}, {2, 0}}), 100, 0) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(median_heuristic_sigma(EmbeddingMatrix::from_rows({{1, 1}, {1, 1}, {1, 1}}), 100, 0) == 1.0);
  // distances 1, 2, 3 -> median 2
  CHECK(median_heuristic_sigma(EmbeddingMatrix::from_rows({{0}, {1}, {3}}), 100, 0) ==
        doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(median_heuristic_sigma(EmbeddingMatrix::from_rows({{0}}), 10, 0), ConfigError);
  std::mt19937_64 rng(2);
  const auto m = EmbeddingMatrix::from_rows(fixture::random_rows(rng, 300, 4));
  const double s1 = median_heuristic_sigma(m, 500, 9);
  CHECK(s1 == median_heuristic_sigma(m, 500, 9));
  CHECK(s1 > 0.0);
  // 4-d standard normal rows: distance^2 ~ 2 chi^2_4, median distance ~ sqrt(2 * 3.357)
  CHECK(s1 == doctest::Approx(std::sqrt(2.0 * 3.357) / std::sqrt(2.0)).epsilon(0.08));
}

TEST_CASE("mmd worked example") {
  const auto f = EmbeddingMatrix::from_rows({{0}, {0}});
  const auto d = EmbeddingMatrix::from_rows({{1}, {1}});
  CHECK(mmd_squared(f, d, KernelConfig(1.0)) == doctest::Approx(2.0 - 2.0 * std::exp(-0.5)).epsilon(1e-12));
  CHECK_THROWS_AS(mmd_squared(f, EmbeddingMatrix::from_rows({{1}}), KernelConfig(1.0)), ConfigError);
  CHECK_THROWS_AS(mmd_squared(f, EmbeddingMatrix::from_rows({{1, 2}, {3, 4}}), KernelConfig(1.0)), ShapeError);
}

TEST_CASE("mmd matches the double-loop oracle") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> n(2, 30), d(1, 8);
  std::uniform_real_distribution<double> sig(0.3, 3.0);
  for (int t = 0; t < 50; ++t) {
    const auto dim = d(rng);
    const auto f = EmbeddingMatrix::from_rows(fixture::random_rows(rng, n(rng), dim));
    const auto s = EmbeddingMatrix::from_rows(fixture::random_rows(rng, n(rng), dim, 1.5));
    const double sigma = sig(rng);
    const double want = oracle::mmd2(fixture::as_stored(f), fixture::as_stored(s), sigma);
    CHECK(mmd_squared(f, s, KernelConfig(sigma)) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("mmd estimator behaviour") {
  std::mt19937_64 rng(4);
  auto mean_abs_same = [&](std::size_t n) {
    double acc = 0.0;
    for (int t = 0; t < 30; ++t) {
      const auto a = EmbeddingMatrix::from_rows(fixture::random_rows(rng, n, 3));
      const auto b = EmbeddingMatrix::from_rows(fixture::random_rows(rng, n, 3));
      acc += std::abs(mmd_squared(a, b, KernelConfig(1.0)));
    }
    return acc / 30.0;
  };
  const double small = mean_abs_same(50);
  const double large = mean_abs_same(200);
  CHECK(small < 2e-2);
  CHECK(large < small);

  // Same rows on both sides: the cross term keeps its diagonal, so the
  // estimate is exactly 2 (mean off-diagonal kernel - 1) / n.
  const auto a = EmbeddingMatrix::from_rows(fixture::random_rows(rng, 60, 3));
  const KernelConfig ka(median_heuristic_sigma(a, 10000, 0));
  const auto stored = fixture::as_stored(a);
  double off = 0.0;
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = 0; j < 60; ++j)
      if (i != j) off += oracle::rbf(stored[i], stored[j], ka.sigma);
  off /= 60.0 * 59.0;
  CHECK(mmd_squared(a, a, ka) == doctest::Approx(2.0 * (off - 1.0) / 60.0).epsilon(1e-12));

  // mean separation of 5 in 8 dims, bandwidth from the pooled sample
  auto p = fixture::random_rows(rng, 100, 8);
  auto q = fixture::random_rows(rng, 100, 8);
  for (auto& r : q) r[0] += 5.0;
  auto pooled = p;
  pooled.insert(pooled.end(), q.begin(), q.end());
  const KernelConfig kp(median_heuristic_sigma(EmbeddingMatrix::from_rows(pooled), 20000, 0));
  CHECK(mmd_squared(EmbeddingMatrix::from_rows(p), EmbeddingMatrix::from_rows(q), kp) > 0.1);
}

TEST_CASE("mmd cache") {
  std::mt19937_64 rng(5);
  const auto full_rows = fixture::random_rows(rng, 40, 4);
  const auto pool = fixture::random_rows(rng, 30, 4, 1.3);
  const auto full = EmbeddingMatrix::from_rows(full_rows);
  const KernelConfig k(1.1);
  std::vector<std::vector<double>> members(pool.begin(), pool.begin() + 6);
  MmdCache cache(full, EmbeddingMatrix::from_rows(members), k);
  CHECK(cache.members() == 6);
  CHECK(cache.full_rows() == 40);
  CHECK(cache.mmd_squared() == doctest::Approx(mmd_squared(full, EmbeddingMatrix::from_rows(members), k)).epsilon(1e-12));

  SUBCASE("no-op swap") {
    const auto row = EmbeddingMatrix::from_rows({members[2]});
    CHECK(std::abs(cache.swap_delta(2, row.row(0))) < 1e-15);
  }

  SUBCASE("out of range") {
    const auto row = EmbeddingMatrix::from_rows({pool[7]});
    CHECK_THROWS_AS(cache.swap_delta(6, row.row(0)), IndexError);
    CHECK_THROWS_AS(cache.apply_swap(9, row.row(0)), IndexError);
    CHECK_THROWS_AS(cache.swap_delta(0, std::span<const float>()), ShapeError);
  }

  SUBCASE("swap involution and antisymmetry") {
    const auto before = cache.mmd_squared();
    const auto in = EmbeddingMatrix::from_rows({pool[10]});
    const auto out = EmbeddingMatrix::from_rows({members[1]});
    const double forward = cache.swap_delta(1, in.row(0));
    cache.apply_swap(1, in.row(0));
    const double back = cache.swap_delta(1, out.row(0));
    CHECK(back == doctest::Approx(-forward).epsilon(1e-9));
    cache.apply_swap(1, out.row(0));
    CHECK(cache.mmd_squared() == doctest::Approx(before).epsilon(1e-9));
  }

  SUBCASE("200 random swaps against scratch recomputation") {
    std::uniform_int_distribution<std::size_t> pos(0, 5), cand(0, 29);
    for (int step = 0; step < 200; ++step) {
      const auto p = pos(rng);
      const auto row = EmbeddingMatrix::from_rows({pool[cand(rng)]});
      const double before = cache.mmd_squared();
      const double delta = cache.swap_delta(p, row.row(0));
      cache.apply_swap(p, row.row(0));
      members[p] = fixture::as_stored(row)[0];
      const double scratch = oracle::mmd2(fixture::as_stored(full), fixture::as_stored(EmbeddingMatrix::from_rows(members)), 1.1);
      CHECK(cache.mmd_squared() == doctest::Approx(scratch).epsilon(1e-9));
      CHECK(before + delta == doctest::Approx(scratch).epsilon(1e-9));
    }
  }
}
