#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "srsi/input_model.hpp"
#include "srsi/kernels.hpp"
#include "srsi/stats.hpp"

namespace srsi {

struct LogRow {
  PairIndex pair;
  RunningStats stats;  // stats.count = r_i, stats.mean = Y_i, variance() = S^2_i
};

// Simulation history. Production code keeps one row per distinct pair and
// merges re-sampled batches; append_row exists for oracle computations that
// model a new batch as an independent design row.
class SimulationLog {
 public:
  std::size_t merge_batch(const PairIndex& pair, const RunningStats& batch);
  void append_row(const PairIndex& pair, const RunningStats& stats);
  std::optional<std::size_t> find(const PairIndex& pair) const;

  const std::vector<LogRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  std::uint64_t total_replications() const;

 private:
  std::vector<LogRow> rows_;
};

// Plug-in noise variance for a pair: its own S^2 when simulated, otherwise
// the mean S^2 over simulated pairs sharing the solution, otherwise the
// global mean S^2. Throws when the log is empty.
double plugin_noise(const SimulationLog& log, const PairIndex& pair);

struct MleOptions {
  int restarts = 5;
  double tol = 1e-8;
  int max_sweeps = 30;
  std::uint64_t seed = 0;
  bool share_lambda = false;
};

struct GpFit {
  KernelParams params;
  double beta0 = 0.0;
  double log_likelihood = 0.0;
};

// Profile-likelihood fit: beta0 is profiled out in closed form and the
// remaining log-parameterized coordinates are optimized by coordinate search
// with random restarts inside fixed bounds.
GpFit fit_mle(const SimulationLog& log, const Eigen::MatrixXd& solutions,
              const DistanceTables& tables, DivergenceKind kind,
              const std::vector<char>& parametric, const MleOptions& options);

// Exact posterior at arbitrary query pairs given the log; reference path
// used by tests and periodic recomputation.
void posterior(const SimulationLog& log, double beta0, const KernelParams& params,
               const Eigen::MatrixXd& solutions, const DistanceTables& tables,
               const std::vector<PairIndex>& queries, Eigen::VectorXd& mean,
               Eigen::MatrixXd& cov);

// Posterior over the full solution-distribution grid, maintained
// incrementally. Incremental observes are exact under the merged-statistics
// noise model, so full recomputation only measures floating-point drift.
class GpModel {
 public:
  GpModel(Eigen::MatrixXd solutions, std::vector<JointInputModel> models,
          std::vector<ObservationSet> data, GpFit fit);

  void set_log(SimulationLog log);

  // Full recomputation from the log; returns max relative drift of (mu, V)
  // against the incremental state, 0 on the first build.
  double refresh();

  // Exact incremental update after observing a batch at one pair.
  void observe(const PairIndex& pair, const RunningStats& batch);

  int num_solutions() const { return static_cast<int>(solutions_.rows()); }
  int num_models() const { return static_cast<int>(models_.size()); }
  int flat(const PairIndex& p) const { return p.solution * num_models() + p.model; }
  int flat(int solution, int model) const { return solution * num_models() + model; }

  const Eigen::VectorXd& mu() const { return mu_; }
  const Eigen::MatrixXd& v() const { return v_; }
  double mu(const PairIndex& p) const { return mu_[flat(p)]; }
  double v(const PairIndex& a, const PairIndex& b) const { return v_(flat(a), flat(b)); }

  // Posterior sd of eta(xhat, P_b) - eta(x, P_b); exactly 0 when x == xhat.
  double sigma_diff(int xhat, int x, int b) const;

  double plugin(const PairIndex& pair) const { return plugin_noise(log_, pair); }

  const SimulationLog& log() const { return log_; }
  const Eigen::MatrixXd& solutions() const { return solutions_; }
  const std::vector<JointInputModel>& models() const { return models_; }
  const std::vector<ObservationSet>& data() const { return data_; }
  const GpFit& fit() const { return fit_; }
  const DistanceTables& tables() const { return tables_; }
  const Eigen::MatrixXd& gamma_x_grid() const { return gx_; }
  const Eigen::MatrixXd& gamma_m_grid() const { return gm_; }

 private:
  Eigen::VectorXd prior_cross_column(const PairIndex& pair) const;
  void rebuild_design_matrices();

  Eigen::MatrixXd solutions_;  // |X| x d
  std::vector<JointInputModel> models_;
  std::vector<ObservationSet> data_;
  GpFit fit_;
  DistanceTables tables_;
  Eigen::MatrixXd gx_;  // |X| x |X|
  Eigen::MatrixXd gm_;  // B x B

  SimulationLog log_;
  Eigen::MatrixXd k_;      // (|X|B) x n prior cross-covariance to design rows
  Eigen::MatrixXd a_inv_;  // n x n inverse of design covariance + noise
  Eigen::VectorXd mu_;     // |X|B
  Eigen::MatrixXd v_;      // (|X|B) x (|X|B)
  bool built_ = false;
};

// Predictive distribution of the next posterior after R replications at one
// pair, using plug-in noise: mu_{t+1} ~ N(mu_t, (V e)(V e)^T / (v/R + V_pp)).
struct Rank1Prediction {
  Eigen::VectorXd mean_sd;  // per-coordinate sd of mu_{t+1}
  Eigen::MatrixXd v_next;
};
Rank1Prediction rank1_predict(const GpModel& gp, const PairIndex& pair, int reps);

// Predictive distribution after R replications at each of two pairs:
// mu_{t+1} ~ N(mu_t, G G^T) with G = C D^{-T}, V_{t+1} = V_t - G G^T.
struct Rank2Prediction {
  Eigen::MatrixXd g;  // (|X|B) x 2
  Eigen::MatrixXd v_next;
};
Rank2Prediction rank2_predict(const GpModel& gp, const PairIndex& first, const PairIndex& second,
                              int reps);

// Lower Cholesky factor of the 2x2 predictive system for two pairs sampled
// with R replications each; entries (d11, l21, d22).
struct PairwiseFactor {
  double d11 = 0.0, l21 = 0.0, d22 = 0.0;
  double scale1 = 0.0, scale2 = 0.0;  // sqrt(R / vhat) per pair
  // Solve D s = d for the 2-vector d built from covariance differences.
  void solve(double d1, double d2, double& s1, double& s2) const {
    s1 = d1 / d11;
    s2 = (d2 - l21 * s1) / d22;
  }
};
PairwiseFactor pairwise_factor(const GpModel& gp, const PairIndex& first, const PairIndex& second,
                               int reps);

}  // namespace srsi
