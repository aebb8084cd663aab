#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "srsi/rng.hpp"
#include "srsi/stats.hpp"

using namespace srsi;

TEST_CASE("derive_seed is deterministic and sensitive to every tag") {
  CHECK(derive_seed(42, {1, 2, 3}) == derive_seed(42, {1, 2, 3}));
  CHECK(derive_seed(42, {1, 2, 3}) != derive_seed(43, {1, 2, 3}));
  CHECK(derive_seed(42, {1, 2, 3}) != derive_seed(42, {1, 2, 4}));
  CHECK(derive_seed(42, {1, 2, 3}) != derive_seed(42, {3, 2, 1}));
  CHECK(derive_seed(42, {1}) != derive_seed(42, {1, 0}));
}

TEST_CASE("equal seeds replay identical raw streams, different seeds diverge") {
  RandomStream a(7), b(7), c(8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t ra = a.raw();
    all_equal = all_equal && ra == b.raw();
    any_diff = any_diff || ra != c.raw();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform01 stays in [0,1) and open-below variant in (0,1]") {
  RandomStream rng(11);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform01_open_below();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

namespace {

template <typename Draw>
RunningStats sample_stats(std::uint64_t seed, int n, Draw&& draw) {
  RandomStream rng(seed);
  RunningStats stats;
  for (int i = 0; i < n; ++i) stats.add(draw(rng));
  return stats;
}

}  // namespace

TEST_CASE("exponential sampler matches its mean and variance") {
  const int n = 200000;
  const double mean = 2.5;
  const auto stats = sample_stats(21, n, [&](RandomStream& r) { return r.exponential(mean); });
  const double se = mean / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(stats.mean - mean) < 4 * se);
  CHECK(std::abs(stats.variance() - mean * mean) < 0.05 * mean * mean);
}

TEST_CASE("normal sampler has zero mean and unit variance") {
  const int n = 200000;
  const auto stats = sample_stats(22, n, [](RandomStream& r) { return r.normal(); });
  CHECK(std::abs(stats.mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(stats.variance() - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gamma sampler matches shape for both algorithm branches") {
  const int n = 200000;
  for (const double shape : {0.4, 1.0, 3.7}) {
    const auto stats = sample_stats(23, n, [&](RandomStream& r) { return r.gamma(shape); });
    const double se = std::sqrt(shape / n);  // Var = shape at unit scale
    CHECK(std::abs(stats.mean - shape) < 4 * se);
    CHECK(std::abs(stats.variance() - shape) < 0.05 * shape);
  }
  RandomStream rng(1);
  CHECK_THROWS_AS(rng.gamma(0.0), std::invalid_argument);
}

TEST_CASE("erlang equals the sum of phase exponentials in distribution") {
  const int n = 100000;
  const int phase = 4;
  const double per_phase = 0.5;
  const auto stats =
      sample_stats(24, n, [&](RandomStream& r) { return r.erlang(phase, per_phase); });
  const double mean = phase * per_phase;
  const double var = phase * per_phase * per_phase;
  CHECK(std::abs(stats.mean - mean) < 4 * std::sqrt(var / n));
  CHECK(std::abs(stats.variance() - var) < 0.05 * var);
}

TEST_CASE("categorical frequencies pass a goodness-of-fit test") {
  const std::vector<double> weights{1.0, 2.0, 3.0, 4.0};
  const int n = 100000;
  RandomStream rng(25);
  std::vector<int> hits(weights.size(), 0);
  for (int i = 0; i < n; ++i) ++hits[rng.categorical(weights)];
  const double total = 10.0;
  double stat = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double expected = n * weights[j] / total;
    const double d = hits[j] - expected;
    stat += d * d / expected;
  }
  CHECK(chi_square_pvalue(stat, static_cast<double>(weights.size() - 1)) > 0.001);

  RandomStream bad(1);
  const std::vector<double> zeros{0.0, 0.0};
  CHECK_THROWS_AS(bad.categorical(zeros), std::invalid_argument);
}

TEST_CASE("uniform_index covers [0,n) without visible bias") {
  const std::size_t n = 7;
  const int draws = 70000;
  RandomStream rng(26);
  std::vector<int> hits(n, 0);
  for (int i = 0; i < draws; ++i) {
    const std::size_t k = rng.uniform_index(n);
    REQUIRE(k < n);
    ++hits[k];
  }
  const double expected = static_cast<double>(draws) / n;
  const double se = std::sqrt(expected * (1.0 - 1.0 / n));
  for (const int h : hits) CHECK(std::abs(h - expected) < 5 * se);
  CHECK_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
}

TEST_CASE("running stats merge equals one-pass accumulation") {
  RandomStream rng(27);
  RunningStats one, a, b;
  for (int i = 0; i < 1000; ++i) {
    const double y = rng.normal() * 3.0 + 1.0;
    one.add(y);
    (i < 400 ? a : b).add(y);
  }
  a.merge(b);
  CHECK(a.count == one.count);
  CHECK(a.mean == doctest::Approx(one.mean).epsilon(1e-12));
  CHECK(a.variance() == doctest::Approx(one.variance()).epsilon(1e-10));
}

TEST_CASE("folded normal mean matches Monte Carlo") {
  RandomStream rng(28);
  for (const auto [a1, a2] : {std::pair{0.0, 1.0}, std::pair{1.3, 0.4}, std::pair{-0.7, 2.0}}) {
    const int n = 1000000;
    RunningStats stats;
    for (int i = 0; i < n; ++i) stats.add(std::abs(a1 + a2 * rng.normal()));
    const double se = std::sqrt(stats.variance() / n);
    CHECK(std::abs(folded_normal_mean(a1, a2) - stats.mean) < 4 * se);
  }
  CHECK(folded_normal_mean(1.0, 0.0) == 1.0);
  CHECK(folded_normal_mean(-2.5, 0.0) == 2.5);
  CHECK(folded_normal_mean(0.0, 1.0) == doctest::Approx(std::sqrt(2.0 / kPi)).epsilon(1e-12));
  CHECK_THROWS_AS(folded_normal_mean(0.0, -1.0), std::invalid_argument);
}
