#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "srsi/procedure.hpp"

namespace srsi {

// Unreadable, truncated, or internally inconsistent checkpoint file.
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Artifact serialization. Doubles are written with round-trip precision and
// nothing host- or time-dependent is emitted, so identical runs produce
// byte-identical files.

std::string format_double(double value);

std::string risk_set_json(const RiskSetEstimate& set, const std::vector<std::string>& labels);
std::string risk_set_csv(const RiskSetEstimate& set, const std::vector<std::string>& labels);
std::string trace_csv(const std::vector<TraceRow>& trace);
std::string frequency_csv(const std::vector<std::uint64_t>& counts,
                          const std::vector<std::string>& labels);
// Per-model posterior mean differences and difference sds against the
// candidate, the raw material of the membership probabilities.
std::string diffs_csv(const GpModel& gp, int candidate);
std::string snapshots_csv(const std::vector<BudgetSnapshot>& snapshots);
std::string benchmark_runs_csv(const BenchmarkResult& result);
std::string benchmark_curves_csv(const BenchmarkResult& result);
std::string reclassify_csv(const std::vector<std::vector<RiskSetEstimate>>& grid,
                           const std::vector<std::string>& labels);

void write_text_file(const std::string& path, const std::string& content);

// One directory per run: config echo, trace, final set (JSON + CSV),
// per-solution replication counts, posterior differences, budget snapshots,
// and optionally a reloadable posterior checkpoint.
void write_run_artifacts(const std::string& directory, const RunResult& result,
                         const std::vector<std::string>& labels, const std::string& config_json,
                         const std::vector<DirichletPosterior>& posteriors, bool with_checkpoint);

// Reloadable end-of-run state: everything needed to re-evaluate the posterior
// (data, concentrations, candidate distributions, hyperparameters, the
// simulation log) but not the dense covariance, which is recomputed on load.
struct Checkpoint {
  std::unique_ptr<GpModel> gp;
  std::vector<DirichletPosterior> posteriors;
  double alpha = 0.0;
  double delta = 0.0;
  int candidate = 0;
  std::vector<std::string> labels;
};

void save_checkpoint(const std::string& path, const GpModel& gp,
                     const std::vector<DirichletPosterior>& posteriors, double alpha, double delta,
                     int candidate, const std::vector<std::string>& labels);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace srsi
