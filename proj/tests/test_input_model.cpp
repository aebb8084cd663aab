#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "srsi/input_model.hpp"
#include "srsi/stats.hpp"

using namespace srsi;

namespace {

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

ProbabilitySimplex simplex(std::initializer_list<double> w) {
  ProbabilitySimplex s;
  s.weights.resize(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (const double v : w) s.weights[i++] = v;
  return s;
}

}  // namespace

TEST_CASE("from_raw collapses ties in first-occurrence order") {
  const auto set = ObservationSet::from_raw(3, {scalar(1.5), scalar(2.5), scalar(1.5), scalar(0.5)});
  CHECK(set.source_index == 3);
  REQUIRE(set.support.size() == 3);
  CHECK(set.support[0][0] == 1.5);
  CHECK(set.support[1][0] == 2.5);
  CHECK(set.support[2][0] == 0.5);
  CHECK(set.counts == std::vector<std::uint64_t>{2, 1, 1});
  CHECK(set.total == 4);
}

TEST_CASE("from_counts validates its inputs") {
  CHECK_THROWS_AS(ObservationSet::from_counts(0, {scalar(1.0)}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(ObservationSet::from_counts(0, {scalar(1.0)}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(ObservationSet::from_counts(0, {}, {}), std::invalid_argument);
  const auto set = ObservationSet::from_counts(1, {scalar(2.0), scalar(3.0)}, {4, 6});
  CHECK(set.total == 10);
  CHECK(set.dim() == 1);
}

TEST_CASE("posterior concentrations add kappa to the counts") {
  const auto set = ObservationSet::from_counts(0, {scalar(0.0), scalar(1.0)}, {1, 1});
  const auto post = build_posterior(set, Eigen::Vector2d(0.5, 2.0));
  CHECK(post.concentration[0] == 1.5);
  CHECK(post.concentration[1] == 3.0);
  CHECK_THROWS_AS(build_posterior(set, Eigen::VectorXd::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(build_posterior(set, 0.0), std::invalid_argument);
}

TEST_CASE("MAP with unit kappa is the empirical distribution") {
  const auto set =
      ObservationSet::from_counts(0, {scalar(0.0), scalar(1.0), scalar(2.0)}, {2, 3, 5});
  const auto map = map_simplex(build_posterior(set, 1.0));
  CHECK(map.weights[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(map.weights[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(map.weights[2] == doctest::Approx(0.5).epsilon(1e-15));

  // General mode: (conc_j - 1) / sum_i (conc_i - 1).
  const auto map2 = map_simplex(build_posterior(set, 2.0));
  CHECK(map2.weights[0] == doctest::Approx(3.0 / 13.0).epsilon(1e-15));
  CHECK(map2.weights[2] == doctest::Approx(6.0 / 13.0).epsilon(1e-15));
}

TEST_CASE("Dirichlet draws match analytic moments within 4 MC standard errors") {
  const auto set =
      ObservationSet::from_counts(0, {scalar(0.0), scalar(1.0), scalar(2.0)}, {2, 5, 13});
  const auto post = build_posterior(set, 1.0);
  const Eigen::VectorXd& conc = post.concentration;
  const double total = conc.sum();

  const int n = 100000;
  RandomStream rng(99);
  std::vector<RunningStats> stats(3);
  for (int i = 0; i < n; ++i) {
    const auto draw = sample_simplex(post, rng);
    REQUIRE(draw.weights.size() == 3);
    CHECK(draw.weights.minCoeff() >= 0.0);
    CHECK(draw.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 3; ++j) stats[static_cast<std::size_t>(j)].add(draw.weights[j]);
  }
  for (int j = 0; j < 3; ++j) {
    const double mean = conc[j] / total;
    const double var = conc[j] * (total - conc[j]) / (total * total * (total + 1.0));
    const auto& s = stats[static_cast<std::size_t>(j)];
    CHECK(std::abs(s.mean - mean) < 4.0 * std::sqrt(var / n));
    CHECK(std::abs(s.variance() - var) < 4.0 * var * std::sqrt(2.0 / n));
  }
}

TEST_CASE("joint sampling draws every source for every model") {
  const auto inter = ObservationSet::from_counts(0, {scalar(0.9), scalar(1.2)}, {7, 3});
  const auto svc = ObservationSet::from_counts(1, {scalar(0.5), scalar(1.0), scalar(2.0)}, {1, 1, 8});
  const std::vector<DirichletPosterior> posts{build_posterior(inter, 1.0),
                                              build_posterior(svc, 1.0)};
  RandomStream rng(5);
  const auto models = sample_joint(posts, 11, rng);
  REQUIRE(models.size() == 11);
  for (const auto& m : models) {
    REQUIRE(m.sources.size() == 2);
    CHECK(m.sources[0].weights.size() == 2);
    CHECK(m.sources[1].weights.size() == 3);
    CHECK(m.sources[0].weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.sources[1].weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }

  RandomStream rng2(5);
  const auto replay = sample_joint(posts, 11, rng2);
  CHECK(replay[10].sources[1].weights == models[10].sources[1].weights);
}

TEST_CASE("simplex mean is the weighted support average") {
  const auto set = ObservationSet::from_counts(0, {scalar(1.0), scalar(3.0)}, {1, 1});
  const Eigen::VectorXd mean = simplex_mean(simplex({0.25, 0.75}), set);
  CHECK(mean[0] == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("divergences hit the disjoint-mass reference values") {
  const auto p = simplex({1.0, 0.0});
  const auto q = simplex({0.0, 1.0});
  CHECK(divergence(p, q, DivergenceKind::total_variation) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(divergence(p, q, DivergenceKind::squared_hellinger) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(divergence(p, q, DivergenceKind::jensen_shannon) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("divergences are symmetric, vanish only at equality, and respect bounds") {
  RandomStream rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd a(4), b(4);
    for (int j = 0; j < 4; ++j) {
      a[j] = rng.gamma(1.0);
      b[j] = rng.gamma(1.0);
    }
    const ProbabilitySimplex p{a / a.sum()}, q{b / b.sum()};
    for (const auto kind : {DivergenceKind::total_variation, DivergenceKind::squared_hellinger,
                            DivergenceKind::jensen_shannon}) {
      const double d = divergence(p, q, kind);
      CHECK(d >= 0.0);
      CHECK(d == doctest::Approx(divergence(q, p, kind)).epsilon(1e-12));
      CHECK(divergence(p, p, kind) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(d > 0.0);  // distinct random simplices
    }
    CHECK(divergence(p, q, DivergenceKind::total_variation) <= 1.0 + 1e-12);
    CHECK(divergence(p, q, DivergenceKind::squared_hellinger) <= 0.5 + 1e-12);
    CHECK(divergence(p, q, DivergenceKind::jensen_shannon) <= std::log(2.0) + 1e-12);
  }
  CHECK_THROWS_AS(divergence(simplex({1.0}), simplex({0.5, 0.5}), DivergenceKind::total_variation),
                  std::invalid_argument);
}

TEST_CASE("divergence kind names round-trip") {
  for (const auto kind : {DivergenceKind::total_variation, DivergenceKind::squared_hellinger,
                          DivergenceKind::jensen_shannon})
    CHECK(divergence_kind_from_string(to_string(kind)) == kind);
  CHECK(divergence_kind_from_string("tv") == DivergenceKind::total_variation);
  CHECK(divergence_kind_from_string("js") == DivergenceKind::jensen_shannon);
  CHECK_THROWS_AS(divergence_kind_from_string("kl"), std::invalid_argument);
}

TEST_CASE("observation files round-trip through the reader") {
  const auto dir = std::filesystem::temp_directory_path() / "srsi_input_model_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "obs.txt").string();
  {
    std::ofstream out(path);
    out << "1.5\n\n2.25\n1.5\n";
  }
  const auto obs = read_observations(path);
  REQUIRE(obs.size() == 3);
  CHECK(obs[0][0] == 1.5);
  CHECK(obs[1][0] == 2.25);
  const auto set = ObservationSet::from_raw(0, obs);
  CHECK(set.support.size() == 2);
  CHECK(set.counts[0] == 2);

  {
    std::ofstream out(path);
    out << "0.5,2\n1.25,3\n";
  }
  std::vector<Eigen::VectorXd> values;
  std::vector<std::uint64_t> counts;
  read_counts(path, values, counts);
  REQUIRE(values.size() == 2);
  CHECK(values[1][0] == 1.25);
  CHECK(counts == std::vector<std::uint64_t>{2, 3});

  {
    std::ofstream out(path);
    out << "1.0\n2.0,3.0\n";
  }
  CHECK_THROWS(read_observations(path));
  std::filesystem::remove_all(dir);
}
