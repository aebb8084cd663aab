#pragma once

#include <Eigen/Core>
#include <memory>
#include <numeric>
#include <vector>

#include "srsi/gp.hpp"
#include "srsi/input_model.hpp"
#include "srsi/rng.hpp"

namespace srsi::testing {

// Self-contained posterior state over a small grid with a randomized
// simulation history: the shared fixture behind the incremental-update,
// acquisition, and risk-set structure checks.
struct SyntheticState {
  Eigen::MatrixXd solutions;
  std::vector<ObservationSet> data;
  std::vector<DirichletPosterior> posteriors;
  std::vector<JointInputModel> models;
  GpFit fit;
  std::unique_ptr<GpModel> gp;
};

// Builds a replication batch whose sample variance is exactly `variance`,
// so noise plug-ins downstream take a predictable value.
inline RunningStats batch_with_variance(int count, double mean, double variance) {
  RunningStats stats;
  stats.count = static_cast<std::uint64_t>(count);
  stats.mean = mean;
  stats.m2 = variance * static_cast<double>(count - 1);
  return stats;
}

inline SyntheticState make_state(std::uint64_t seed, int num_solutions, int num_models,
                                 int support, int pairs, int reps) {
  RandomStream rng(derive_seed(seed, {0xabcdefULL}));
  SyntheticState st;

  st.solutions.resize(num_solutions, 1);
  for (int x = 0; x < num_solutions; ++x) st.solutions(x, 0) = x;

  std::vector<Eigen::VectorXd> values;
  std::vector<std::uint64_t> counts;
  for (int j = 0; j < support; ++j) {
    values.push_back(Eigen::VectorXd::Constant(1, static_cast<double>(j)));
    counts.push_back(1 + rng.uniform_index(20));
  }
  st.data.push_back(ObservationSet::from_counts(0, values, counts));
  st.posteriors.push_back(build_posterior(st.data[0], 1.0));
  st.models = sample_joint(st.posteriors, num_models, rng);

  st.fit.params.tau_sq = 0.5 + rng.uniform01();
  st.fit.params.lambda = Eigen::VectorXd::Constant(1, 2.0 + 4.0 * rng.uniform01());
  st.fit.params.vartheta = Eigen::VectorXd::Constant(1, 0.05 + 0.3 * rng.uniform01());
  st.fit.params.divergence = DivergenceKind::squared_hellinger;
  st.fit.params.parametric = {false};
  st.fit.beta0 = 2.0 * rng.normal();

  std::vector<int> flat(static_cast<std::size_t>(num_solutions * num_models));
  std::iota(flat.begin(), flat.end(), 0);
  for (std::size_t i = 0; i < flat.size(); ++i)
    std::swap(flat[i], flat[i + rng.uniform_index(flat.size() - i)]);

  SimulationLog log;
  const double tau = std::sqrt(st.fit.params.tau_sq);
  for (int i = 0; i < pairs && i < static_cast<int>(flat.size()); ++i) {
    const PairIndex pair{flat[static_cast<std::size_t>(i)] / num_models,
                         flat[static_cast<std::size_t>(i)] % num_models};
    RunningStats stats;
    stats.count = static_cast<std::uint64_t>(reps);
    stats.mean = st.fit.beta0 + tau * rng.normal();
    const double s2 = 0.2 + 0.8 * rng.uniform01();
    stats.m2 = s2 * static_cast<double>(reps - 1);
    log.append_row(pair, stats);
  }

  st.gp = std::make_unique<GpModel>(st.solutions, st.models, st.data, st.fit);
  st.gp->set_log(std::move(log));
  st.gp->refresh();
  return st;
}

}  // namespace srsi::testing
