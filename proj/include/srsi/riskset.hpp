#pragma once

#include <Eigen/Core>
#include <vector>

namespace srsi {

// Classification of every solution against the candidate at one (alpha, delta).
struct RiskSetEstimate {
  double alpha = 0.0;
  double delta = 0.0;
  int xhat = 0;
  std::vector<double> probability;  // averaged tail probability per solution; 0 at xhat
  std::vector<char> included;       // strict > alpha; xhat always excluded

  std::vector<int> members() const;
  std::size_t size() const;
};

// mu_diff(x, b) = posterior mean of eta(xhat, P_b) - eta(x, P_b);
// sigma(x, b) = posterior sd of that difference (0 rows allowed: the cdf term
// degenerates to the indicator of mu_diff > delta, a tie at delta excluded).
RiskSetEstimate estimate_risk_set(const Eigen::MatrixXd& mu_diff, const Eigen::MatrixXd& sigma,
                                  int xhat, double alpha, double delta);

// Indicator form used with known conditional means: counts mean_diff > delta.
RiskSetEstimate indicator_risk_set(const Eigen::MatrixXd& mean_diff, int xhat, double alpha,
                                   double delta);

// Same posterior reused over a grid; outer index alpha, inner delta.
std::vector<std::vector<RiskSetEstimate>> reclassify(const Eigen::MatrixXd& mu_diff,
                                                     const Eigen::MatrixXd& sigma, int xhat,
                                                     const std::vector<double>& alphas,
                                                     const std::vector<double>& deltas);

// |symmetric difference| between an estimate and a reference set.
int misclassification(const RiskSetEstimate& estimate, const RiskSetEstimate& reference);
bool includes(const RiskSetEstimate& estimate, const RiskSetEstimate& reference);
bool same_members(const RiskSetEstimate& estimate, const RiskSetEstimate& reference);

struct SetMetrics {
  double inclusion = 0.0;         // fraction of runs whose estimate covers the reference
  double identification = 0.0;    // fraction of runs matching the reference exactly
  double misclassification = 0.0; // mean symmetric-difference size
};
SetMetrics evaluate(const std::vector<RiskSetEstimate>& estimates, const RiskSetEstimate& reference);

}  // namespace srsi
