#include "srsi/procedure.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>

namespace srsi {

Variant variant_from_string(const std::string& name) {
  if (name == "srsi") return Variant::srsi;
  if (name == "srsi-m") return Variant::srsi_m;
  if (name == "srsi-v") return Variant::srsi_v;
  if (name == "nmc") return Variant::nmc;
  throw std::invalid_argument("unknown variant: " + name);
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::srsi: return "srsi";
    case Variant::srsi_m: return "srsi-m";
    case Variant::srsi_v: return "srsi-v";
    case Variant::nmc: return "nmc";
  }
  return "srsi";
}

bool RunConfig::alpha_on_grid() const {
  const double scaled = alpha * num_models;
  return std::abs(scaled - std::round(scaled)) < 1e-12;
}

void RunConfig::validate() const {
  if (num_models < 1) throw std::invalid_argument("config: need at least one candidate distribution");
  if (initial_pairs < 2) throw std::invalid_argument("config: need at least two initial design pairs");
  if (initial_reps < 2) throw std::invalid_argument("config: initial replications must be >= 2");
  if (reps_per_iteration < 2)
    throw std::invalid_argument("config: per-iteration replications must be >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha must be in (0, 1)");
  if (!(delta >= 0.0)) throw std::invalid_argument("config: delta must be nonnegative");
  if (!(kappa > 0.0)) throw std::invalid_argument("config: kappa must be positive");
  if (budget == 0 && max_iterations == 0)
    throw std::invalid_argument("config: set a replication budget or an iteration cap");
  if (candidate < 0 && candidate_reps < 1)
    throw std::invalid_argument("config: the sample-best rule needs candidate_reps >= 1");
  if (mle_restarts < 1) throw std::invalid_argument("config: mle_restarts must be >= 1");
  if (refit_every < 0 || refresh_every < 0)
    throw std::invalid_argument("config: cadences must be nonnegative");
  if (alpha_on_grid())
    std::cerr << "warning: alpha = " << alpha << " is a multiple of 1/" << num_models
              << "; set membership can hinge on ties\n";
}

ProblemInstance make_instance(const Problem& problem, const RunConfig& config) {
  config.validate();
  ProblemInstance inst;
  inst.data = problem.generate_data(config.seed);
  if (static_cast<int>(inst.data.size()) != problem.num_sources())
    throw std::logic_error(problem.name() + ": data source count mismatch");
  inst.posteriors.reserve(inst.data.size());
  for (const auto& set : inst.data) inst.posteriors.push_back(build_posterior(set, config.kappa));
  RandomStream model_rng(derive_seed(config.seed, {stream_tag::models}));
  inst.models = sample_joint(inst.posteriors, config.num_models, model_rng);

  const int nx = problem.num_solutions();
  if (config.candidate >= 0) {
    if (config.candidate >= nx) throw std::invalid_argument("config: candidate index out of range");
    inst.candidate = config.candidate;
    return inst;
  }
  // Sample-best rule: simulate every solution under the posterior-mode
  // distributions and take the best sample mean, ties to the lowest index.
  JointInputModel map_model;
  map_model.sources.reserve(inst.posteriors.size());
  for (const auto& posterior : inst.posteriors) map_model.sources.push_back(map_simplex(posterior));
  int best = 0;
  double best_mean = std::numeric_limits<double>::infinity();
  for (int x = 0; x < nx; ++x) {
    RunningStats stats;
    for (int rep = 0; rep < config.candidate_reps; ++rep) {
      RandomStream rng(derive_seed(config.seed,
                                   {stream_tag::candidate_rule, static_cast<std::uint64_t>(x),
                                    static_cast<std::uint64_t>(rep)}));
      stats.add(problem.replicate(x, inst.data, map_model, rng));
    }
    if (stats.mean < best_mean) {
      best_mean = stats.mean;
      best = x;
    }
  }
  inst.candidate = best;
  inst.candidate_rule_replications =
      static_cast<std::uint64_t>(nx) * static_cast<std::uint64_t>(config.candidate_reps);
  return inst;
}

namespace {

std::vector<std::uint64_t> sorted_checkpoints(std::vector<std::uint64_t> cps) {
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  return cps;
}

std::vector<PairIndex> initial_design(int nx, int nb, int n0, RandomStream& rng) {
  const std::uint64_t grid = static_cast<std::uint64_t>(nx) * static_cast<std::uint64_t>(nb);
  if (static_cast<std::uint64_t>(n0) > grid)
    throw std::invalid_argument("config: initial design larger than the solution-model grid");
  const int base = n0 / nx;
  std::vector<char> used(static_cast<std::size_t>(grid), 0);
  std::vector<PairIndex> design;
  design.reserve(static_cast<std::size_t>(n0));
  std::vector<int> perm(static_cast<std::size_t>(nb));
  for (int x = 0; x < nx; ++x) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int j = 0; j < base; ++j) {
      const std::size_t pick =
          static_cast<std::size_t>(j) + rng.uniform_index(static_cast<std::size_t>(nb - j));
      std::swap(perm[static_cast<std::size_t>(j)], perm[pick]);
      const int b = perm[static_cast<std::size_t>(j)];
      design.push_back({x, b});
      used[static_cast<std::size_t>(x) * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b)] = 1;
    }
  }
  for (int rem = n0 - base * nx; rem > 0;) {
    const int x = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(nx)));
    const int b = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(nb)));
    char& flag = used[static_cast<std::size_t>(x) * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b)];
    if (flag) continue;
    flag = 1;
    design.push_back({x, b});
    --rem;
  }
  return design;
}

RiskSetEstimate current_estimate(const GpModel& gp, int candidate, double alpha, double delta) {
  Eigen::MatrixXd mu_diff, sigma;
  diff_matrices(gp, candidate, mu_diff, sigma);
  return estimate_risk_set(mu_diff, sigma, candidate, alpha, delta);
}

SelectionRule rule_for(Variant variant) {
  switch (variant) {
    case Variant::srsi_m: return SelectionRule::mean_gap;
    case Variant::srsi_v: return SelectionRule::variance;
    default: return SelectionRule::expected_change;
  }
}

RunResult run_sequential(const Problem& problem, const RunConfig& config,
                         const ProblemInstance& inst, std::vector<std::uint64_t> cps) {
  const auto start_time = std::chrono::steady_clock::now();
  const int nx = problem.num_solutions();
  const int nb = config.num_models;
  const std::vector<char> parametric = problem.parametric_sources();

  RunResult out;
  out.config = config;
  out.candidate = inst.candidate;
  out.candidate_rule_replications = inst.candidate_rule_replications;
  out.replications_per_solution.assign(static_cast<std::size_t>(nx), 0);

  std::vector<std::uint32_t> rep_count(static_cast<std::size_t>(nx) * static_cast<std::size_t>(nb), 0);
  std::uint64_t spent = 0;
  const auto simulate_batch = [&](const PairIndex& pair, int reps) {
    const std::size_t flat =
        static_cast<std::size_t>(pair.solution) * static_cast<std::size_t>(nb) +
        static_cast<std::size_t>(pair.model);
    RunningStats batch;
    for (int i = 0; i < reps; ++i) {
      RandomStream rng(derive_seed(config.seed, {stream_tag::simulation,
                                                 static_cast<std::uint64_t>(flat),
                                                 static_cast<std::uint64_t>(rep_count[flat]++)}));
      batch.add(problem.replicate(pair.solution, inst.data, inst.models[pair.model], rng));
    }
    out.replications_per_solution[static_cast<std::size_t>(pair.solution)] +=
        static_cast<std::uint64_t>(reps);
    spent += static_cast<std::uint64_t>(reps);
    return batch;
  };

  RandomStream design_rng(derive_seed(config.seed, {stream_tag::design}));
  const std::vector<PairIndex> design = initial_design(nx, nb, config.initial_pairs, design_rng);
  SimulationLog log;
  for (const auto& pair : design) log.merge_batch(pair, simulate_batch(pair, config.initial_reps));

  const Eigen::MatrixXd solutions = problem.solution_matrix();
  const DistanceTables tables =
      DistanceTables::build(inst.models, inst.data, config.divergence, parametric);
  MleOptions mle;
  mle.restarts = config.mle_restarts;
  mle.seed = derive_seed(config.seed, {stream_tag::hyperfit});
  mle.share_lambda = config.share_lambda;
  GpFit fit = fit_mle(log, solutions, tables, config.divergence, parametric, mle);

  auto gp = std::make_unique<GpModel>(solutions, inst.models, inst.data, fit);
  gp->set_log(std::move(log));
  gp->refresh();

  // Budget-curve snapshots; crossings are checked after every batch of work.
  std::size_t next_cp = 0;
  const auto flush_snapshots = [&](bool force) {
    while (next_cp < cps.size() && (force || spent >= cps[next_cp])) {
      out.snapshots.push_back(
          {cps[next_cp], spent, current_estimate(*gp, inst.candidate, config.alpha, config.delta)});
      ++next_cp;
    }
  };
  flush_snapshots(false);

  const SelectionRule rule = rule_for(config.variant);
  int t = 0;
  while (true) {
    if (config.budget > 0 && spent >= config.budget) break;
    if (config.max_iterations > 0 && t >= config.max_iterations) break;
    ++t;

    if (config.refit_every > 0 && t > 1 && (t - 1) % config.refit_every == 0) {
      fit = fit_mle(gp->log(), solutions, tables, config.divergence, parametric, mle);
      auto refitted = std::make_unique<GpModel>(solutions, inst.models, inst.data, fit);
      refitted->set_log(gp->log());
      refitted->refresh();
      gp = std::move(refitted);
    }

    const RiskSetEstimate current = current_estimate(*gp, inst.candidate, config.alpha, config.delta);
    const AcquisitionDecision decision = decide(*gp, inst.candidate, current,
                                                config.reps_per_iteration, config.delta,
                                                config.alpha, rule);
    if (decision.mode == SamplingMode::pairwise) {
      const PairIndex lead{inst.candidate, decision.model};
      gp->observe(lead, simulate_batch(lead, config.reps_per_iteration));
    }
    const PairIndex chosen{decision.solution, decision.model};
    gp->observe(chosen, simulate_batch(chosen, config.reps_per_iteration));

    double drift = 0.0;
    if (config.refresh_every > 0 && t % config.refresh_every == 0) {
      drift = gp->refresh();
      out.max_drift = std::max(out.max_drift, drift);
      if (drift > 1e-6)
        std::cerr << "warning: incremental posterior drifted by " << drift
                  << " at iteration " << t << "\n";
    }
    out.trace.push_back({t, decision.solution, decision.model, decision.mode, decision.criterion,
                         static_cast<int>(current.size()), spent, drift});
    flush_snapshots(false);
  }

  out.max_drift = std::max(out.max_drift, gp->refresh());
  out.final_set = current_estimate(*gp, inst.candidate, config.alpha, config.delta);
  flush_snapshots(true);
  out.total_replications = spent;
  out.fit = gp->fit();
  out.gp = std::move(gp);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return out;
}

RunResult run_equal_allocation(const Problem& problem, const RunConfig& config,
                               const ProblemInstance& inst, std::vector<std::uint64_t> cps) {
  const auto start_time = std::chrono::steady_clock::now();
  const int nx = problem.num_solutions();
  const int nb = config.num_models;
  const std::uint64_t per_round = static_cast<std::uint64_t>(nx) * static_cast<std::uint64_t>(nb);
  if (config.budget < 2 * per_round)
    throw std::invalid_argument("nmc: budget must cover two replications of every pair");
  const std::uint64_t rounds = config.budget / per_round;

  struct Target {
    std::uint64_t budget = 0;
    std::uint64_t reps = 0;
  };
  std::vector<Target> targets;
  targets.reserve(cps.size());
  for (const std::uint64_t cp : cps) {
    const std::uint64_t r = std::min(rounds, cp / per_round);
    if (r < 2)
      throw std::invalid_argument("nmc: checkpoint budget below two replications per pair");
    targets.push_back({cp, r});
  }

  RunResult out;
  out.config = config;
  out.candidate = inst.candidate;
  out.candidate_rule_replications = inst.candidate_rule_replications;
  out.replications_per_solution.assign(static_cast<std::size_t>(nx), 0);

  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(nx, nb);
  const auto estimate_at = [&](std::uint64_t reps) {
    Eigen::MatrixXd mean_diff(nx, nb);
    const double inv = 1.0 / static_cast<double>(reps);
    for (int x = 0; x < nx; ++x)
      for (int b = 0; b < nb; ++b)
        mean_diff(x, b) = (sums(inst.candidate, b) - sums(x, b)) * inv;
    return indicator_risk_set(mean_diff, inst.candidate, config.alpha, config.delta);
  };

  std::size_t next_target = 0;
  for (std::uint64_t rep = 0; rep < rounds; ++rep) {
    for (int x = 0; x < nx; ++x) {
      for (int b = 0; b < nb; ++b) {
        const std::uint64_t flat =
            static_cast<std::uint64_t>(x) * static_cast<std::uint64_t>(nb) + static_cast<std::uint64_t>(b);
        RandomStream rng(derive_seed(config.seed, {stream_tag::simulation, flat, rep}));
        sums(x, b) += problem.replicate(x, inst.data, inst.models[static_cast<std::size_t>(b)], rng);
      }
    }
    while (next_target < targets.size() && targets[next_target].reps == rep + 1) {
      out.snapshots.push_back(
          {targets[next_target].budget, (rep + 1) * per_round, estimate_at(rep + 1)});
      ++next_target;
    }
  }

  out.final_set = estimate_at(rounds);
  while (next_target < targets.size()) {
    out.snapshots.push_back({targets[next_target].budget, rounds * per_round, out.final_set});
    ++next_target;
  }
  for (int x = 0; x < nx; ++x)
    out.replications_per_solution[static_cast<std::size_t>(x)] = rounds * static_cast<std::uint64_t>(nb);
  out.total_replications = rounds * per_round;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return out;
}

}  // namespace

RunResult run_procedure(const Problem& problem, const RunConfig& config,
                        const ProblemInstance& instance,
                        const std::vector<std::uint64_t>& checkpoints) {
  config.validate();
  auto cps = sorted_checkpoints(checkpoints);
  if (config.variant == Variant::nmc)
    return run_equal_allocation(problem, config, instance, std::move(cps));
  return run_sequential(problem, config, instance, std::move(cps));
}

RunResult run_procedure(const Problem& problem, const RunConfig& config,
                        const std::vector<std::uint64_t>& checkpoints) {
  const ProblemInstance instance = make_instance(problem, config);
  return run_procedure(problem, config, instance, checkpoints);
}

RiskSetEstimate oracle_risk_set(const Problem& problem, const std::vector<ObservationSet>& data,
                                const std::vector<JointInputModel>& models, int candidate,
                                double alpha, double delta) {
  if (!problem.has_conditional_mean())
    throw std::invalid_argument(problem.name() + ": oracle needs a closed-form conditional mean");
  const int nx = problem.num_solutions();
  const int nb = static_cast<int>(models.size());
  Eigen::MatrixXd mean(nx, nb);
  for (int x = 0; x < nx; ++x)
    for (int b = 0; b < nb; ++b)
      mean(x, b) = problem.conditional_mean(x, data, models[static_cast<std::size_t>(b)]);
  Eigen::MatrixXd mean_diff(nx, nb);
  for (int x = 0; x < nx; ++x)
    for (int b = 0; b < nb; ++b) mean_diff(x, b) = mean(candidate, b) - mean(x, b);
  return indicator_risk_set(mean_diff, candidate, alpha, delta);
}

RiskSetEstimate reclassify_fresh(const GpModel& gp,
                                 const std::vector<DirichletPosterior>& posteriors, int candidate,
                                 double alpha, double delta, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("reclassify: need at least one fresh distribution");
  RandomStream rng(derive_seed(seed, {stream_tag::fresh_models}));
  const std::vector<JointInputModel> fresh = sample_joint(posteriors, count, rng);

  const KernelParams& params = gp.fit().params;
  const Eigen::MatrixXd& solutions = gp.solutions();
  const auto& rows = gp.log().rows();
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const int nx = gp.num_solutions();

  // Factor the design system once; every fresh distribution reuses it.
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd resid(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ri = rows[static_cast<std::size_t>(i)];
    resid[i] = ri.stats.mean - gp.fit().beta0;
    for (Eigen::Index j = i; j < n; ++j) {
      const double k = kernel_value(ri.pair, rows[static_cast<std::size_t>(j)].pair, params,
                                    solutions, gp.tables());
      a(i, j) = k;
      a(j, i) = k;
    }
    a(i, i) += ri.stats.variance() / static_cast<double>(ri.stats.count);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    a.diagonal().array() += 1e-8 * params.tau_sq;
    llt.compute(a);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("reclassify: design system factorization failed");
  }
  const Eigen::VectorXd weights = llt.solve(resid);
  const Eigen::MatrixXd prior = params.tau_sq * gamma_x_table(solutions, params.lambda);

  Eigen::MatrixXd mu_diff(nx, count), sigma(nx, count);
  Eigen::MatrixXd cross(n, nx);
  for (int f = 0; f < count; ++f) {
    const JointInputModel& model = fresh[static_cast<std::size_t>(f)];
    // Correlation of the fresh distribution with each fitted one, per design row.
    std::vector<double> gm_cache(static_cast<std::size_t>(gp.num_models()), -1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& ri = rows[static_cast<std::size_t>(i)];
      double& gm_i = gm_cache[static_cast<std::size_t>(ri.pair.model)];
      if (gm_i < 0.0)
        gm_i = gamma_m(model, gp.models()[static_cast<std::size_t>(ri.pair.model)], gp.data(), params);
      for (int x = 0; x < nx; ++x)
        cross(i, x) = params.tau_sq * gp.gamma_x_grid()(ri.pair.solution, x) * gm_i;
    }
    const Eigen::VectorXd mean = cross.transpose() * weights;
    const Eigen::MatrixXd reduced = llt.solve(cross);
    for (int x = 0; x < nx; ++x) {
      mu_diff(x, f) = mean[candidate] - mean[x];
      if (x == candidate) {
        sigma(x, f) = 0.0;
        continue;
      }
      const double var = prior(candidate, candidate) - 2.0 * prior(candidate, x) + prior(x, x) -
                         (cross.col(candidate) - cross.col(x)).dot(reduced.col(candidate) - reduced.col(x));
      sigma(x, f) = var > 0.0 ? std::sqrt(var) : 0.0;
    }
  }
  return estimate_risk_set(mu_diff, sigma, candidate, alpha, delta);
}

namespace {

void run_pool(int workers, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 0) return;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  std::atomic<int> next{0};
  const auto loop = [&] {
    for (int job; (job = next.fetch_add(1)) < jobs;) {
      try {
        body(job);
      } catch (...) {
        errors[static_cast<std::size_t>(job)] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(std::min(workers, jobs)));
    for (int w = 0; w < std::min(workers, jobs); ++w) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
  }
  for (const auto& error : errors)
    if (error) std::rethrow_exception(error);
}

}  // namespace

BenchmarkResult run_benchmark(const Problem& problem, const RunConfig& base,
                              const BenchmarkConfig& bench) {
  if (!problem.has_conditional_mean())
    throw std::invalid_argument("benchmark: problem lacks a conditional-mean oracle");
  if (bench.macro_runs < 1) throw std::invalid_argument("benchmark: macro_runs must be >= 1");
  if (bench.variants.empty()) throw std::invalid_argument("benchmark: no variants configured");
  if (bench.budgets.empty()) throw std::invalid_argument("benchmark: no budgets configured");
  const std::vector<std::uint64_t> budgets = sorted_checkpoints(bench.budgets);
  const int workers = std::max(1, bench.workers);
  const int seeds = bench.macro_runs;
  const int num_variants = static_cast<int>(bench.variants.size());

  std::vector<ProblemInstance> instances(static_cast<std::size_t>(seeds));
  std::vector<RiskSetEstimate> oracles(static_cast<std::size_t>(seeds));
  run_pool(workers, seeds, [&](int i) {
    RunConfig config = base;
    config.seed = bench.first_seed + static_cast<std::uint64_t>(i);
    instances[static_cast<std::size_t>(i)] = make_instance(problem, config);
    const auto& inst = instances[static_cast<std::size_t>(i)];
    oracles[static_cast<std::size_t>(i)] =
        oracle_risk_set(problem, inst.data, inst.models, inst.candidate, base.alpha, base.delta);
  });

  std::vector<std::vector<BenchmarkRun>> rows(
      static_cast<std::size_t>(num_variants) * static_cast<std::size_t>(seeds));
  run_pool(workers, num_variants * seeds, [&](int job) {
    const int v = job / seeds;
    const int s = job % seeds;
    RunConfig config = base;
    config.variant = bench.variants[static_cast<std::size_t>(v)];
    config.seed = bench.first_seed + static_cast<std::uint64_t>(s);
    config.budget = budgets.back();
    const RunResult result =
        run_procedure(problem, config, instances[static_cast<std::size_t>(s)], budgets);
    const RiskSetEstimate& oracle = oracles[static_cast<std::size_t>(s)];
    auto& mine = rows[static_cast<std::size_t>(job)];
    for (const auto& snap : result.snapshots) {
      BenchmarkRun row;
      row.variant = config.variant;
      row.seed = config.seed;
      row.budget = snap.budget;
      row.spent = snap.spent;
      row.set_size = static_cast<int>(snap.estimate.size());
      row.oracle_size = static_cast<int>(oracle.size());
      row.misclassified = misclassification(snap.estimate, oracle);
      row.includes_oracle = includes(snap.estimate, oracle);
      row.identified = same_members(snap.estimate, oracle);
      mine.push_back(row);
    }
  });

  BenchmarkResult out;
  for (const auto& job_rows : rows)
    out.runs.insert(out.runs.end(), job_rows.begin(), job_rows.end());
  for (int v = 0; v < num_variants; ++v) {
    for (const std::uint64_t budget : budgets) {
      BenchmarkCurvePoint point;
      point.variant = bench.variants[static_cast<std::size_t>(v)];
      point.budget = budget;
      int n = 0;
      for (const auto& row : out.runs) {
        if (row.variant != point.variant || row.budget != budget) continue;
        point.metrics.inclusion += row.includes_oracle ? 1.0 : 0.0;
        point.metrics.identification += row.identified ? 1.0 : 0.0;
        point.metrics.misclassification += row.misclassified;
        ++n;
      }
      if (n > 0) {
        point.metrics.inclusion /= n;
        point.metrics.identification /= n;
        point.metrics.misclassification /= n;
      }
      out.curves.push_back(point);
    }
  }
  return out;
}

}  // namespace srsi
