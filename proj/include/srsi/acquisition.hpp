#pragma once

#include <Eigen/Core>
#include <vector>

#include "srsi/gp.hpp"
#include "srsi/riskset.hpp"

namespace srsi {

enum class SamplingMode { single, pairwise };

// How the per-solution candidate distribution is scored.
enum class SelectionRule { expected_change, mean_gap, variance };

struct SolutionScores {
  int p1 = -1;              // model maximizing the single-sampling score
  double h1 = 0.0;
  int p2 = -1;              // model maximizing the pairwise score
  double h2 = 0.0;
  double e_single = 0.0;    // expected classification change sampling (x, p1)
  double e_pairwise = 0.0;  // expected change sampling {(xhat, p2), (x, p2)}
};

struct AcquisitionDecision {
  int solution = -1;
  int model = -1;
  SamplingMode mode = SamplingMode::single;
  double criterion = 0.0;  // winning max(e_single, e_pairwise / 2)
  std::vector<SolutionScores> table;  // indexed by solution
};

// Posterior mean differences and difference sds against the candidate,
// |X| x B, the inputs the risk-set estimator consumes.
void diff_matrices(const GpModel& gp, int xhat, Eigen::MatrixXd& mu_diff, Eigen::MatrixXd& sigma);

// Taylor-approximated expected number of classification flips after R
// replications at (x, model). Zero-variance edge cases follow the limit
// conventions: a zero scale contributes the indicator of the numerator sign,
// and an exact 0/0 contributes one half.
double expected_change_single(const GpModel& gp, int xhat, const RiskSetEstimate& current, int x,
                              int model, int reps, double delta, double alpha);

// Same quantity when both (xhat, model) and (x, model) receive R replications.
double expected_change_pairwise(const GpModel& gp, int xhat, const RiskSetEstimate& current, int x,
                                int model, int reps, double delta, double alpha);

// argmax_b of the posterior variance at (xhat, b); ties to the lowest index.
int select_model_for_xhat(const GpModel& gp, int xhat);

// Folded-normal mean of the membership-probability shift at (x, b) under
// single sampling (h1) or pairwise sampling (h2); includes the 1/B factor.
double score_h1(const GpModel& gp, int xhat, int x, int b, int reps, double delta);
double score_h2(const GpModel& gp, int xhat, int x, int b, int reps, double delta);

// Full sampling decision: candidate distributions per solution, expected
// changes, and the winning (solution, model, mode) with the pairwise value
// discounted by its doubled cost.
AcquisitionDecision decide(const GpModel& gp, int xhat, const RiskSetEstimate& current, int reps,
                           double delta, double alpha, SelectionRule rule);

}  // namespace srsi
