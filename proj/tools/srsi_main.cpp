#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "srsi/config.hpp"
#include "srsi/io.hpp"
#include "srsi/procedure.hpp"

namespace {

using namespace srsi;

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::string> solution_labels(const Problem& problem) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(problem.num_solutions()));
  for (int x = 0; x < problem.num_solutions(); ++x) labels.push_back(problem.solution_label(x));
  return labels;
}

void print_set_summary(std::ostream& os, const RiskSetEstimate& set,
                       const std::vector<std::string>& labels) {
  os << "  alpha=" << format_double(set.alpha) << " delta=" << format_double(set.delta)
     << " candidate=" << labels[static_cast<std::size_t>(set.xhat)] << " size=" << set.size()
     << '\n';
  if (set.size() == 0) {
    os << "  risk set is empty: no competitor risks being preferable at this level\n";
    return;
  }
  os << "  solution  label  probability\n";
  for (const int x : set.members())
    os << "  " << x << "  " << labels[static_cast<std::size_t>(x)] << "  "
       << format_double(set.probability[static_cast<std::size_t>(x)]) << '\n';
}

struct CommonOverrides {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::uint64_t budget = 0;
  bool budget_set = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonOverrides& common) {
  cmd->add_option("--seed", common.seed, "Override the run seed")
      ->each([&common](const std::string&) { common.seed_set = true; });
  cmd->add_option("--out", common.out, "Override the output directory");
  cmd->add_option("--budget-override", common.budget, "Override the replication budget")
      ->each([&common](const std::string&) { common.budget_set = true; });
  cmd->add_option("--workers", common.workers, "Worker threads for macro-runs")
      ->check(CLI::PositiveNumber);
}

ExperimentSpec load_with_overrides(const std::string& path, const CommonOverrides& common) {
  ExperimentSpec spec = load_spec(path);
  if (common.seed_set) {
    spec.run.seed = common.seed;
    spec.benchmark.first_seed = common.seed;
  }
  if (!common.out.empty()) spec.output_dir = common.out;
  if (common.budget_set) {
    spec.run.budget = common.budget;
    spec.benchmark.budgets = {common.budget};
  }
  if (common.workers > 0) spec.benchmark.workers = common.workers;
  return spec;
}

int cmd_run(const std::string& spec_path, const CommonOverrides& common) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentSpec spec = load_with_overrides(spec_path, common);
  const std::shared_ptr<const Problem> problem = make_problem(spec);
  const std::vector<std::string> labels = solution_labels(*problem);
  const std::string config_json = spec_to_json(spec);

  RunConfig config = spec.run;
  config.validate();
  const ProblemInstance instance = make_instance(*problem, config);
  std::cerr << "[srsi] instance ready (candidate " << labels[static_cast<std::size_t>(
                   instance.candidate)]
            << ") in " << elapsed_seconds(start) << " s\n";

  for (const Variant variant : spec.variants) {
    config.variant = variant;
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result = run_procedure(*problem, config, instance);
    std::cerr << "[srsi] " << to_string(variant) << " finished in " << elapsed_seconds(t0)
              << " s\n";
    const std::filesystem::path dir = std::filesystem::path(spec.output_dir) / to_string(variant);
    write_run_artifacts(dir.string(), result, labels, config_json, instance.posteriors,
                        spec.write_checkpoint && result.gp != nullptr);
    std::cout << "variant " << to_string(variant) << " (spent " << result.total_replications
              << " of " << config.budget << "):\n";
    print_set_summary(std::cout, result.final_set, labels);
    std::cout << "  artifacts: " << dir.string() << '\n';
  }
  return 0;
}

int cmd_benchmark(const std::string& spec_path, const CommonOverrides& common) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentSpec spec = load_with_overrides(spec_path, common);
  const std::shared_ptr<const Problem> problem = make_problem(spec);
  if (!problem->has_conditional_mean())
    throw ConfigError("benchmark requires a problem with a closed-form conditional mean");
  RunConfig base = spec.run;
  base.validate();
  const BenchmarkConfig& bench = spec.benchmark;
  if (bench.budgets.empty())
    throw ConfigError("benchmark requires a non-empty budgets list");

  const BenchmarkResult result = run_benchmark(*problem, base, bench);
  std::cerr << "[srsi] benchmark finished in " << elapsed_seconds(start) << " s\n";

  std::filesystem::create_directories(spec.output_dir);
  const std::filesystem::path dir(spec.output_dir);
  write_text_file((dir / "runs.csv").string(), benchmark_runs_csv(result));
  write_text_file((dir / "curves.csv").string(), benchmark_curves_csv(result));
  write_text_file((dir / "config.json").string(), spec_to_json(spec));

  std::cout << "variant  budget  inclusion  identification  misclassification\n";
  for (const auto& point : result.curves)
    std::cout << to_string(point.variant) << "  " << point.budget << "  "
              << format_double(point.metrics.inclusion) << "  "
              << format_double(point.metrics.identification) << "  "
              << format_double(point.metrics.misclassification) << '\n';
  std::cout << "artifacts: " << dir.string() << '\n';
  return 0;
}

int cmd_reclassify(const std::string& checkpoint_path, std::vector<double> alphas,
                   std::vector<double> deltas, int fresh, std::uint64_t fresh_seed,
                   const std::string& out_csv) {
  const auto start = std::chrono::steady_clock::now();
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  if (alphas.empty()) alphas = {cp.alpha};
  if (deltas.empty()) deltas = {cp.delta};

  std::vector<std::vector<RiskSetEstimate>> grid;
  if (fresh > 0) {
    for (const double alpha : alphas) {
      std::vector<RiskSetEstimate> row;
      for (const double delta : deltas)
        row.push_back(
            reclassify_fresh(*cp.gp, cp.posteriors, cp.candidate, alpha, delta, fresh, fresh_seed));
      grid.push_back(std::move(row));
    }
  } else {
    const GpModel& gp = *cp.gp;
    Eigen::MatrixXd mu_diff(gp.num_solutions(), gp.num_models());
    Eigen::MatrixXd sigma(gp.num_solutions(), gp.num_models());
    for (int x = 0; x < gp.num_solutions(); ++x)
      for (int b = 0; b < gp.num_models(); ++b) {
        mu_diff(x, b) = gp.mu()[gp.flat(cp.candidate, b)] - gp.mu()[gp.flat(x, b)];
        sigma(x, b) = gp.sigma_diff(cp.candidate, x, b);
      }
    grid = reclassify(mu_diff, sigma, cp.candidate, alphas, deltas);
  }
  std::cerr << "[srsi] reclassification finished in " << elapsed_seconds(start) << " s\n";

  const auto cell = [&](const RiskSetEstimate& set) {
    std::string s = "{";
    bool first = true;
    for (const int x : set.members()) {
      if (!first) s += ';';
      first = false;
      s += cp.labels.empty() ? std::to_string(x) : cp.labels[static_cast<std::size_t>(x)];
    }
    return s + "}";
  };
  std::cout << "alpha\\delta";
  for (const double delta : deltas) std::cout << "  " << format_double(delta);
  std::cout << '\n';
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    std::cout << format_double(alphas[i]);
    for (std::size_t j = 0; j < deltas.size(); ++j) std::cout << "  " << cell(grid[i][j]);
    std::cout << '\n';
  }
  if (!out_csv.empty()) {
    write_text_file(out_csv, reclassify_csv(grid, cp.labels));
    std::cout << "artifacts: " << out_csv << '\n';
  }
  return 0;
}

int cmd_simulate(const std::string& spec_path, int solution, int reps,
                 const CommonOverrides& common) {
  const ExperimentSpec spec = load_with_overrides(spec_path, common);
  const std::shared_ptr<const Problem> problem = make_problem(spec);
  if (solution < 0 || solution >= problem->num_solutions())
    throw ConfigError("simulate: solution index out of range");
  if (reps < 1) throw ConfigError("simulate: need at least one replication");

  const std::vector<ObservationSet> data = problem->generate_data(spec.run.seed);
  JointInputModel map_model;
  for (const auto& set : data)
    map_model.sources.push_back(map_simplex(build_posterior(set, spec.run.kappa)));

  // Matches the replications the sample-best candidate rule would draw at
  // this solution, so outputs are directly comparable with run artifacts.
  RunningStats stats;
  for (int rep = 0; rep < reps; ++rep) {
    RandomStream rng(derive_seed(spec.run.seed,
                                 {stream_tag::candidate_rule, static_cast<std::uint64_t>(solution),
                                  static_cast<std::uint64_t>(rep)}));
    const double y = problem->replicate(solution, data, map_model, rng);
    stats.add(y);
    std::cout << format_double(y) << '\n';
  }
  std::cout << "mean " << format_double(stats.mean) << " sd "
            << format_double(std::sqrt(stats.variance())) << " n " << stats.count << '\n';
  return 0;
}

int cmd_gen_data(const std::string& spec_path, const CommonOverrides& common) {
  const ExperimentSpec spec = load_with_overrides(spec_path, common);
  const std::shared_ptr<const Problem> problem = make_problem(spec);
  const std::vector<ObservationSet> data = problem->generate_data(spec.run.seed);

  const std::filesystem::path dir(spec.output_dir);
  std::filesystem::create_directories(dir);
  for (const auto& set : data) {
    std::string text;
    for (std::size_t j = 0; j < set.support.size(); ++j)
      for (std::uint64_t c = 0; c < set.counts[j]; ++c) {
        const Eigen::VectorXd& value = set.support[j];
        for (Eigen::Index i = 0; i < value.size(); ++i) {
          if (i > 0) text += ',';
          text += format_double(value[i]);
        }
        text += '\n';
      }
    const std::filesystem::path path = dir / ("source" + std::to_string(set.source_index) + ".txt");
    write_text_file(path.string(), text);
    std::cout << path.string() << "  " << set.total << " observations, " << set.support.size()
              << " distinct\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential risk-set inference for simulation optimization under input uncertainty"};
  app.require_subcommand(1);

  CommonOverrides common;
  std::string spec_path;
  std::string checkpoint_path;
  std::vector<double> alphas, deltas;
  int fresh = 0;
  std::uint64_t fresh_seed = 1;
  std::string out_csv;
  int solution = 0;
  int reps = 10;

  CLI::App* run = app.add_subcommand("run", "Run the configured variants once and write artifacts");
  run->add_option("spec", spec_path, "Experiment file (JSON)")->required();
  add_common(run, common);

  CLI::App* bench = app.add_subcommand("benchmark", "Macro-replicated comparison against the oracle");
  bench->add_option("spec", spec_path, "Experiment file (JSON)")->required();
  add_common(bench, common);

  CLI::App* rec = app.add_subcommand("reclassify", "Re-evaluate risk sets from a saved posterior");
  rec->add_option("checkpoint", checkpoint_path, "checkpoint.bin from a previous run")->required();
  rec->add_option("--alphas", alphas, "Probability levels (default: the run's)")->delimiter(',');
  rec->add_option("--deltas", deltas, "Tolerances (default: the run's)")->delimiter(',');
  rec->add_option("--fresh", fresh, "Evaluate this many freshly drawn distributions instead")
      ->check(CLI::NonNegativeNumber);
  rec->add_option("--fresh-seed", fresh_seed, "Seed for the fresh draws");
  rec->add_option("--csv", out_csv, "Also write the grid as CSV to this path");

  CLI::App* sim = app.add_subcommand("simulate", "Print raw replications at one solution");
  sim->add_option("spec", spec_path, "Experiment file (JSON)")->required();
  sim->add_option("--solution", solution, "Solution index")->required();
  sim->add_option("--reps", reps, "Replications to draw");
  add_common(sim, common);

  CLI::App* gen = app.add_subcommand("gen-data", "Write the synthetic datasets as observation files");
  gen->add_option("spec", spec_path, "Experiment file (JSON)")->required();
  add_common(gen, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(spec_path, common);
    if (bench->parsed()) return cmd_benchmark(spec_path, common);
    if (rec->parsed())
      return cmd_reclassify(checkpoint_path, alphas, deltas, fresh, fresh_seed, out_csv);
    if (sim->parsed()) return cmd_simulate(spec_path, solution, reps, common);
    if (gen->parsed()) return cmd_gen_data(spec_path, common);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
