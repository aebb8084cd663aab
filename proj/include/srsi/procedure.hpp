#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "srsi/acquisition.hpp"
#include "srsi/gp.hpp"
#include "srsi/problem.hpp"
#include "srsi/riskset.hpp"

namespace srsi {

enum class Variant { srsi, srsi_m, srsi_v, nmc };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant variant);

struct RunConfig {
  Variant variant = Variant::srsi;
  int num_models = 101;         // candidate distributions B
  int initial_pairs = 100;      // n0 design pairs
  int initial_reps = 30;        // replications per design pair
  int reps_per_iteration = 30;  // constant R_t schedule
  double alpha = 0.2;
  double delta = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t budget = 0;  // replication budget; 0 defers to max_iterations
  int max_iterations = 0;    // iteration cap; 0 defers to budget
  int candidate = -1;        // fixed benchmark solution, or -1 for the sample-best rule
  int candidate_reps = 200;  // replications per solution inside that rule
  double kappa = 1.0;        // prior concentration added to every support point
  DivergenceKind divergence = DivergenceKind::squared_hellinger;
  bool share_lambda = false;
  int mle_restarts = 5;
  int refit_every = 0;    // hyperparameter refit cadence; 0 fits once
  int refresh_every = 500;  // full posterior recomputation cadence; 0 = final only

  // Throws std::invalid_argument; a level alpha sitting exactly on the 1/B
  // grid additionally warns on stderr (membership then hinges on ties).
  void validate() const;
  bool alpha_on_grid() const;
};

struct TraceRow {
  int iteration = 0;
  int solution = -1;
  int model = -1;
  SamplingMode mode = SamplingMode::single;
  double criterion = 0.0;
  int set_size = 0;          // |estimate| entering the iteration
  std::uint64_t spent = 0;   // cumulative replications after the iteration
  double drift = 0.0;        // relative drift when a refresh ran this iteration
};

struct BudgetSnapshot {
  std::uint64_t budget = 0;
  std::uint64_t spent = 0;
  RiskSetEstimate estimate;
};

// Everything derived from (problem, seed) shared by all variants: the data,
// its posterior, the B candidate distributions, and the benchmark candidate.
struct ProblemInstance {
  std::vector<ObservationSet> data;
  std::vector<DirichletPosterior> posteriors;
  std::vector<JointInputModel> models;
  int candidate = -1;
  std::uint64_t candidate_rule_replications = 0;
};

ProblemInstance make_instance(const Problem& problem, const RunConfig& config);

struct RunResult {
  RunConfig config;
  int candidate = -1;
  RiskSetEstimate final_set;
  std::vector<TraceRow> trace;
  std::vector<std::uint64_t> replications_per_solution;
  std::uint64_t total_replications = 0;            // budget-counted
  std::uint64_t candidate_rule_replications = 0;   // outside the budget
  std::vector<BudgetSnapshot> snapshots;
  double max_drift = 0.0;
  GpFit fit;                    // default for the equal-allocation baseline
  std::unique_ptr<GpModel> gp;  // null for the equal-allocation baseline
  double wall_seconds = 0.0;
};

// Runs the configured variant to its budget or iteration cap. `checkpoints`
// lists intermediate budgets at which the current estimate is snapshotted, so
// one run yields the whole budget curve.
RunResult run_procedure(const Problem& problem, const RunConfig& config,
                        const std::vector<std::uint64_t>& checkpoints = {});
RunResult run_procedure(const Problem& problem, const RunConfig& config,
                        const ProblemInstance& instance,
                        const std::vector<std::uint64_t>& checkpoints = {});

// Indicator set from the closed-form conditional means over the same models.
RiskSetEstimate oracle_risk_set(const Problem& problem, const std::vector<ObservationSet>& data,
                                const std::vector<JointInputModel>& models, int candidate,
                                double alpha, double delta);

// Risk set over freshly drawn candidate distributions (possibly more than the
// fitted B) evaluated under the frozen posterior — no new simulation.
RiskSetEstimate reclassify_fresh(const GpModel& gp,
                                 const std::vector<DirichletPosterior>& posteriors, int candidate,
                                 double alpha, double delta, int count, std::uint64_t seed);

struct BenchmarkConfig {
  std::vector<Variant> variants{Variant::srsi, Variant::nmc};
  int macro_runs = 20;
  std::uint64_t first_seed = 1;
  std::vector<std::uint64_t> budgets;  // ascending replication budgets
  int workers = 1;
};

struct BenchmarkRun {
  Variant variant = Variant::srsi;
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;
  std::uint64_t spent = 0;
  int set_size = 0;
  int oracle_size = 0;
  int misclassified = 0;
  bool includes_oracle = false;
  bool identified = false;
};

struct BenchmarkCurvePoint {
  Variant variant = Variant::srsi;
  std::uint64_t budget = 0;
  SetMetrics metrics;
};

struct BenchmarkResult {
  std::vector<BenchmarkRun> runs;           // variant-major, then seed, then budget
  std::vector<BenchmarkCurvePoint> curves;  // same outer order, aggregated over seeds
};

// Macro-replicated comparison against the per-seed oracle set; requires a
// conditional-mean problem. One run per (variant, seed) covers every budget
// via snapshots; seeds share data/models/candidate across variants.
BenchmarkResult run_benchmark(const Problem& problem, const RunConfig& base,
                              const BenchmarkConfig& bench);

}  // namespace srsi
