#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "srsi/procedure.hpp"
#include "srsi/problem.hpp"
#include "srsi/riskset.hpp"
#include "srsi/rng.hpp"

using namespace srsi;

namespace {

// Cheap quadratic test problem: the conditional mean is (0.6 x - mean(P))^2,
// so the conditional optimum moves with the input distribution and risk sets
// are nontrivial, while a replication is one normal draw.
class ToyProblem final : public Problem {
 public:
  ToyProblem(int nx, double noise_sd) : nx_(nx), noise_sd_(noise_sd) {}

  std::string name() const override { return "toy"; }
  int num_solutions() const override { return nx_; }
  Eigen::MatrixXd solution_matrix() const override {
    Eigen::MatrixXd xs(nx_, 1);
    for (int x = 0; x < nx_; ++x) xs(x, 0) = static_cast<double>(x);
    return xs;
  }
  std::string solution_label(int x) const override { return "x" + std::to_string(x); }
  int num_sources() const override { return 1; }
  std::vector<char> parametric_sources() const override { return {0}; }

  std::vector<ObservationSet> generate_data(std::uint64_t seed) const override {
    RandomStream rng(derive_seed(seed, {stream_tag::data}));
    std::vector<Eigen::VectorXd> values;
    std::vector<std::uint64_t> counts;
    for (int j = 0; j < 3; ++j) {
      values.push_back(Eigen::VectorXd::Constant(1, static_cast<double>(j)));
      counts.push_back(1 + rng.uniform_index(8));
    }
    return {ObservationSet::from_counts(0, values, counts)};
  }

  double replicate(int x, const std::vector<ObservationSet>& data, const JointInputModel& model,
                   RandomStream& rng) const override {
    return conditional_mean(x, data, model) + noise_sd_ * rng.normal();
  }

  bool has_conditional_mean() const override { return true; }
  double conditional_mean(int x, const std::vector<ObservationSet>& data,
                          const JointInputModel& model) const override {
    const double m = simplex_mean(model.sources[0], data[0])[0];
    const double coord = 0.6 * static_cast<double>(x);
    return (coord - m) * (coord - m);
  }

 private:
  int nx_;
  double noise_sd_;
};

RunConfig small_config() {
  RunConfig config;
  config.num_models = 3;
  config.initial_pairs = 6;
  config.initial_reps = 2;
  config.reps_per_iteration = 2;
  config.alpha = 0.3;
  config.delta = 0.05;
  config.seed = 17;
  config.budget = 30;
  config.candidate = -1;
  config.candidate_reps = 5;
  config.mle_restarts = 2;
  return config;
}

std::uint64_t sum(const std::vector<std::uint64_t>& v) {
  std::uint64_t total = 0;
  for (std::uint64_t x : v) total += x;
  return total;
}

}  // namespace

TEST_CASE("variant names round-trip") {
  for (Variant v : {Variant::srsi, Variant::srsi_m, Variant::srsi_v, Variant::nmc})
    CHECK(variant_from_string(to_string(v)) == v);
  CHECK_THROWS_AS((void)variant_from_string("srsl"), std::invalid_argument);
}

TEST_CASE("run configuration rejects out-of-range fields") {
  const RunConfig good = small_config();
  CHECK_NOTHROW(good.validate());

  auto broken = [&](auto&& mutate) {
    RunConfig bad = good;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  };
  broken([](RunConfig& c) { c.num_models = 0; });
  broken([](RunConfig& c) { c.initial_pairs = 1; });
  broken([](RunConfig& c) { c.initial_reps = 1; });
  broken([](RunConfig& c) { c.reps_per_iteration = 1; });
  broken([](RunConfig& c) { c.alpha = 0.0; });
  broken([](RunConfig& c) { c.alpha = 1.0; });
  broken([](RunConfig& c) { c.delta = -0.1; });
  broken([](RunConfig& c) { c.kappa = 0.0; });
  broken([](RunConfig& c) { c.budget = 0; c.max_iterations = 0; });
  broken([](RunConfig& c) { c.candidate = -1; c.candidate_reps = 0; });
  broken([](RunConfig& c) { c.mle_restarts = 0; });
  broken([](RunConfig& c) { c.refit_every = -1; });
  broken([](RunConfig& c) { c.refresh_every = -1; });
}

TEST_CASE("level gridding is detected exactly") {
  RunConfig config = small_config();
  config.alpha = 0.2;
  config.num_models = 100;
  CHECK(config.alpha_on_grid());
  CHECK_NOTHROW(config.validate());  // warns on stderr, still valid
  config.num_models = 101;
  CHECK_FALSE(config.alpha_on_grid());
  config.num_models = 4;
  config.alpha = 0.25;
  CHECK(config.alpha_on_grid());
}

TEST_CASE("instances are deterministic and pick the sample-best candidate") {
  const ToyProblem problem(5, 1e-6);
  RunConfig config = small_config();
  config.num_models = 4;
  config.seed = 9;
  config.candidate_reps = 7;

  const ProblemInstance a = make_instance(problem, config);
  const ProblemInstance b = make_instance(problem, config);
  CHECK(a.candidate == b.candidate);
  CHECK(a.candidate_rule_replications == 5 * 7);
  REQUIRE(a.models.size() == 4);
  for (std::size_t m = 0; m < a.models.size(); ++m)
    CHECK(a.models[m].sources[0].weights == b.models[m].sources[0].weights);

  // With nearly noiseless replications the rule must find the conditional
  // optimum under the posterior-mode weights.
  JointInputModel mode;
  mode.sources.push_back(map_simplex(a.posteriors[0]));
  int best = 0;
  double best_mean = std::numeric_limits<double>::infinity();
  for (int x = 0; x < 5; ++x) {
    const double mean = problem.conditional_mean(x, a.data, mode);
    if (mean < best_mean) {
      best_mean = mean;
      best = x;
    }
  }
  CHECK(a.candidate == best);
}

TEST_CASE("a fixed candidate skips the selection rule") {
  const ToyProblem problem(4, 0.05);
  RunConfig config = small_config();
  config.candidate = 3;
  const ProblemInstance inst = make_instance(problem, config);
  CHECK(inst.candidate == 3);
  CHECK(inst.candidate_rule_replications == 0);

  config.candidate = 4;  // past the last solution
  CHECK_THROWS_AS((void)make_instance(problem, config), std::invalid_argument);
}

TEST_CASE("sequential runs respect the replication budget") {
  const ToyProblem problem(4, 0.05);
  RunConfig config = small_config();

  SUBCASE("a budget equal to the design spend runs no iterations") {
    config.budget = 12;  // 6 pairs x 2 replications
    const RunResult result = run_procedure(problem, config);
    CHECK(result.total_replications == 12);
    CHECK(result.trace.empty());
    REQUIRE(result.gp != nullptr);
    CHECK(result.gp->log().size() == 6);
    for (const auto& row : result.gp->log().rows()) CHECK(row.stats.count == 2);
    CHECK(sum(result.replications_per_solution) == 12);
  }

  SUBCASE("overshoot is bounded by one iteration's batch") {
    config.budget = 17;
    const RunResult result = run_procedure(problem, config);
    CHECK(result.total_replications >= 17);
    CHECK(result.total_replications < 17 + 2ULL * static_cast<std::uint64_t>(config.reps_per_iteration));
    CHECK(sum(result.replications_per_solution) == result.total_replications);
    REQUIRE_FALSE(result.trace.empty());
    CHECK(result.trace.back().spent == result.total_replications);
    int expected_iteration = 1;
    std::uint64_t last_spent = 12;
    for (const TraceRow& row : result.trace) {
      CHECK(row.iteration == expected_iteration++);
      CHECK(row.solution >= 0);
      CHECK(row.solution < 4);
      CHECK(row.model >= 0);
      CHECK(row.model < 3);
      CHECK(row.spent > last_spent);
      const std::uint64_t batch = row.spent - last_spent;
      if (row.mode == SamplingMode::pairwise)
        CHECK(batch == 2ULL * static_cast<std::uint64_t>(config.reps_per_iteration));
      else
        CHECK(batch == static_cast<std::uint64_t>(config.reps_per_iteration));
      CHECK(std::isfinite(row.criterion));
      CHECK(row.criterion >= 0.0);
      CHECK(row.set_size >= 0);
      CHECK(row.set_size <= 3);
      last_spent = row.spent;
    }
  }

  SUBCASE("an iteration cap works without a budget") {
    config.budget = 0;
    config.max_iterations = 3;
    const RunResult result = run_procedure(problem, config);
    CHECK(result.trace.size() == 3);
    CHECK(result.total_replications >= 12 + 3ULL * 2ULL);
  }

  SUBCASE("an oversized initial design is rejected") {
    config.initial_pairs = 13;  // grid is 4 x 3
    config.budget = 100;
    CHECK_THROWS_AS((void)run_procedure(problem, config), std::invalid_argument);
  }
}

TEST_CASE("sequential runs are reproducible end to end") {
  const ToyProblem problem(4, 0.05);
  RunConfig config = small_config();
  config.budget = 26;
  const RunResult a = run_procedure(problem, config);
  const RunResult b = run_procedure(problem, config);
  CHECK(a.candidate == b.candidate);
  CHECK(a.total_replications == b.total_replications);
  CHECK(a.final_set.members() == b.final_set.members());
  CHECK(a.final_set.probability == b.final_set.probability);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].solution == b.trace[i].solution);
    CHECK(a.trace[i].model == b.trace[i].model);
    CHECK(a.trace[i].mode == b.trace[i].mode);
    CHECK(a.trace[i].criterion == b.trace[i].criterion);
  }
  CHECK(a.max_drift == b.max_drift);
  CHECK(a.max_drift < 1e-6);
}

TEST_CASE("snapshots capture every requested budget crossing") {
  const ToyProblem problem(4, 0.05);
  RunConfig config = small_config();
  config.budget = 20;
  const std::vector<std::uint64_t> checkpoints{5, 12, 14, 20, 1000000};
  const RunResult result = run_procedure(problem, config, checkpoints);
  REQUIRE(result.snapshots.size() == 5);
  std::uint64_t last_budget = 0, last_spent = 0;
  for (const BudgetSnapshot& snap : result.snapshots) {
    CHECK(snap.budget > last_budget);
    CHECK(snap.spent >= last_spent);
    CHECK(snap.estimate.alpha == config.alpha);
    CHECK(snap.estimate.delta == config.delta);
    CHECK(snap.estimate.xhat == result.candidate);
    last_budget = snap.budget;
    last_spent = snap.spent;
  }
  // The design spend covers the first two checkpoints at once.
  CHECK(result.snapshots[0].spent == 12);
  CHECK(result.snapshots[1].spent == 12);
  // The unreachable checkpoint is flushed with the final estimate.
  CHECK(result.snapshots[4].spent == result.total_replications);
  CHECK(result.snapshots[4].estimate.members() == result.final_set.members());
}

TEST_CASE("equal allocation reproduces a hand-rolled estimator") {
  const ToyProblem problem(3, 0.05);
  RunConfig config = small_config();
  config.variant = Variant::nmc;
  config.num_models = 2;
  config.seed = 23;
  config.budget = 25;  // per round 3 x 2 = 6 -> 4 full rounds
  const ProblemInstance inst = make_instance(problem, config);
  const RunResult result = run_procedure(problem, config, inst, {12, 18, 25});

  CHECK(result.total_replications == 24);
  CHECK(result.gp == nullptr);
  for (std::uint64_t per_solution : result.replications_per_solution)
    CHECK(per_solution == 8);

  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(3, 2);
  for (std::uint64_t rep = 0; rep < 4; ++rep)
    for (int x = 0; x < 3; ++x)
      for (int b = 0; b < 2; ++b) {
        const std::uint64_t flat = static_cast<std::uint64_t>(x) * 2 + static_cast<std::uint64_t>(b);
        RandomStream rng(derive_seed(config.seed, {stream_tag::simulation, flat, rep}));
        sums(x, b) += problem.replicate(x, inst.data, inst.models[static_cast<std::size_t>(b)], rng);
      }
  Eigen::MatrixXd mean_diff(3, 2);
  for (int x = 0; x < 3; ++x)
    for (int b = 0; b < 2; ++b)
      mean_diff(x, b) = (sums(inst.candidate, b) - sums(x, b)) / 4.0;
  const RiskSetEstimate expected =
      indicator_risk_set(mean_diff, inst.candidate, config.alpha, config.delta);
  CHECK(result.final_set.members() == expected.members());

  REQUIRE(result.snapshots.size() == 3);
  CHECK(result.snapshots[0].spent == 12);
  CHECK(result.snapshots[1].spent == 18);
  CHECK(result.snapshots[2].spent == 24);
}

TEST_CASE("equal allocation requires two rounds of coverage") {
  const ToyProblem problem(3, 0.05);
  RunConfig config = small_config();
  config.variant = Variant::nmc;
  config.num_models = 2;
  config.budget = 11;  // below 2 x 6
  CHECK_THROWS_AS((void)run_procedure(problem, config), std::invalid_argument);

  config.budget = 25;
  const ProblemInstance inst = make_instance(problem, config);
  CHECK_THROWS_AS((void)run_procedure(problem, config, inst, {7}), std::invalid_argument);
}

TEST_CASE("the oracle set classifies by conditional means") {
  const ToyProblem problem(4, 0.05);
  RunConfig config = small_config();
  config.seed = 31;
  const ProblemInstance inst = make_instance(problem, config);
  const RiskSetEstimate oracle =
      oracle_risk_set(problem, inst.data, inst.models, inst.candidate, config.alpha, config.delta);
  CHECK(oracle.xhat == inst.candidate);
  CHECK(oracle.probability[static_cast<std::size_t>(inst.candidate)] == 0.0);

  const int nb = static_cast<int>(inst.models.size());
  for (int x = 0; x < 4; ++x) {
    if (x == inst.candidate) continue;
    int over = 0;
    for (int b = 0; b < nb; ++b) {
      const double diff = problem.conditional_mean(inst.candidate, inst.data, inst.models[static_cast<std::size_t>(b)]) -
                          problem.conditional_mean(x, inst.data, inst.models[static_cast<std::size_t>(b)]);
      if (diff > config.delta) ++over;
    }
    const bool member = static_cast<double>(over) / nb > config.alpha;
    CHECK(static_cast<bool>(oracle.included[static_cast<std::size_t>(x)]) == member);
  }

  Mm1kProblemConfig no_oracle_cfg;
  no_oracle_cfg.resample_support = true;
  const Mm1kProblem no_oracle(no_oracle_cfg);
  CHECK_THROWS_AS((void)oracle_risk_set(no_oracle, inst.data, inst.models, 0, 0.3, 0.05),
                  std::invalid_argument);
}

TEST_CASE("fresh-distribution reclassification reuses the frozen posterior") {
  const ToyProblem problem(4, 0.05);
  RunConfig config = small_config();
  config.budget = 24;
  const ProblemInstance inst = make_instance(problem, config);
  const RunResult result = run_procedure(problem, config, inst);
  REQUIRE(result.gp != nullptr);

  const RiskSetEstimate fresh =
      reclassify_fresh(*result.gp, inst.posteriors, result.candidate, 0.3, 0.05, 50, 99);
  CHECK(fresh.alpha == 0.3);
  CHECK(fresh.delta == 0.05);
  CHECK(fresh.xhat == result.candidate);
  CHECK(fresh.probability[static_cast<std::size_t>(result.candidate)] == 0.0);
  CHECK_FALSE(static_cast<bool>(fresh.included[static_cast<std::size_t>(result.candidate)]));
  for (double p : fresh.probability) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }

  const RiskSetEstimate again =
      reclassify_fresh(*result.gp, inst.posteriors, result.candidate, 0.3, 0.05, 50, 99);
  CHECK(again.probability == fresh.probability);
  CHECK(again.members() == fresh.members());

  CHECK_THROWS_AS((void)reclassify_fresh(*result.gp, inst.posteriors, result.candidate, 0.3, 0.05,
                                         0, 99),
                  std::invalid_argument);
}

TEST_CASE("all sequential variants run on a shared instance") {
  const ToyProblem problem(4, 0.05);
  RunConfig config = small_config();
  config.budget = 20;
  const ProblemInstance inst = make_instance(problem, config);
  for (Variant variant : {Variant::srsi, Variant::srsi_m, Variant::srsi_v}) {
    CAPTURE(to_string(variant));
    RunConfig run = config;
    run.variant = variant;
    const RunResult result = run_procedure(problem, run, inst);
    CHECK(result.candidate == inst.candidate);
    CHECK(result.total_replications >= 20);
    CHECK(result.final_set.xhat == inst.candidate);
    REQUIRE(result.gp != nullptr);
  }
}

TEST_CASE("the benchmark harness aggregates per-budget comparisons") {
  const ToyProblem problem(4, 0.05);
  RunConfig base = small_config();
  base.num_models = 2;

  BenchmarkConfig bench;
  bench.variants = {Variant::srsi, Variant::nmc};
  bench.macro_runs = 2;
  bench.first_seed = 5;
  bench.budgets = {16, 24};
  bench.workers = 2;

  const BenchmarkResult result = run_benchmark(problem, base, bench);
  REQUIRE(result.runs.size() == 8);  // 2 variants x 2 seeds x 2 budgets
  REQUIRE(result.curves.size() == 4);

  for (const BenchmarkRun& run : result.runs) {
    CHECK(run.spent > 0);
    CHECK(run.misclassified >= 0);
    CHECK(run.misclassified <= 3);
    CHECK(run.set_size >= 0);
    CHECK(run.oracle_size >= 0);
    if (run.identified) CHECK(run.misclassified == 0);
  }
  // Rows arrive variant-major, then seed, then ascending budget.
  CHECK(result.runs[0].variant == Variant::srsi);
  CHECK(result.runs[0].seed == 5);
  CHECK(result.runs[0].budget == 16);
  CHECK(result.runs[1].budget == 24);
  CHECK(result.runs[2].seed == 6);
  CHECK(result.runs[4].variant == Variant::nmc);

  // Both variants score against the same per-seed oracle.
  CHECK(result.runs[0].oracle_size == result.runs[4].oracle_size);
  CHECK(result.runs[2].oracle_size == result.runs[6].oracle_size);

  for (const BenchmarkCurvePoint& point : result.curves) {
    CHECK(point.metrics.inclusion >= 0.0);
    CHECK(point.metrics.inclusion <= 1.0);
    CHECK(point.metrics.identification >= 0.0);
    CHECK(point.metrics.identification <= 1.0);
    CHECK(point.metrics.misclassification >= 0.0);
  }

  BenchmarkConfig bad = bench;
  bad.budgets = {};
  CHECK_THROWS_AS((void)run_benchmark(problem, base, bad), std::invalid_argument);
}
