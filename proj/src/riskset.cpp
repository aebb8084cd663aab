#include "srsi/riskset.hpp"

#include <stdexcept>

#include "srsi/stats.hpp"

namespace srsi {

std::vector<int> RiskSetEstimate::members() const {
  std::vector<int> out;
  for (std::size_t x = 0; x < included.size(); ++x)
    if (included[x]) out.push_back(static_cast<int>(x));
  return out;
}

std::size_t RiskSetEstimate::size() const {
  std::size_t n = 0;
  for (char c : included) n += c != 0;
  return n;
}

namespace {

void check_args(const Eigen::MatrixXd& mu_diff, int xhat, double alpha) {
  if (mu_diff.rows() == 0 || mu_diff.cols() == 0)
    throw std::invalid_argument("risk set: empty posterior grid");
  if (xhat < 0 || xhat >= mu_diff.rows()) throw std::invalid_argument("risk set: xhat out of range");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("risk set: alpha must be in (0,1)");
}

}  // namespace

RiskSetEstimate estimate_risk_set(const Eigen::MatrixXd& mu_diff, const Eigen::MatrixXd& sigma,
                                  int xhat, double alpha, double delta) {
  check_args(mu_diff, xhat, alpha);
  if (sigma.rows() != mu_diff.rows() || sigma.cols() != mu_diff.cols())
    throw std::invalid_argument("risk set: sigma shape mismatch");
  const int xs = static_cast<int>(mu_diff.rows());
  const int bs = static_cast<int>(mu_diff.cols());
  RiskSetEstimate est;
  est.alpha = alpha;
  est.delta = delta;
  est.xhat = xhat;
  est.probability.assign(static_cast<std::size_t>(xs), 0.0);
  est.included.assign(static_cast<std::size_t>(xs), 0);
  for (int x = 0; x < xs; ++x) {
    if (x == xhat) continue;
    double acc = 0.0;
    for (int b = 0; b < bs; ++b) {
      const double num = mu_diff(x, b) - delta;
      const double s = sigma(x, b);
      if (s > 0.0)
        acc += norm_cdf(num / s);
      else
        acc += num > 0.0 ? 1.0 : 0.0;
    }
    est.probability[static_cast<std::size_t>(x)] = acc / bs;
    est.included[static_cast<std::size_t>(x)] = acc / bs > alpha ? 1 : 0;
  }
  return est;
}

RiskSetEstimate indicator_risk_set(const Eigen::MatrixXd& mean_diff, int xhat, double alpha,
                                   double delta) {
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(mean_diff.rows(), mean_diff.cols());
  return estimate_risk_set(mean_diff, zeros, xhat, alpha, delta);
}

std::vector<std::vector<RiskSetEstimate>> reclassify(const Eigen::MatrixXd& mu_diff,
                                                     const Eigen::MatrixXd& sigma, int xhat,
                                                     const std::vector<double>& alphas,
                                                     const std::vector<double>& deltas) {
  std::vector<std::vector<RiskSetEstimate>> grid;
  grid.reserve(alphas.size());
  for (double a : alphas) {
    std::vector<RiskSetEstimate> row;
    row.reserve(deltas.size());
    for (double d : deltas) row.push_back(estimate_risk_set(mu_diff, sigma, xhat, a, d));
    grid.push_back(std::move(row));
  }
  return grid;
}

int misclassification(const RiskSetEstimate& estimate, const RiskSetEstimate& reference) {
  if (estimate.included.size() != reference.included.size())
    throw std::invalid_argument("misclassification: size mismatch");
  int count = 0;
  for (std::size_t x = 0; x < estimate.included.size(); ++x)
    count += (estimate.included[x] != 0) != (reference.included[x] != 0);
  return count;
}

bool includes(const RiskSetEstimate& estimate, const RiskSetEstimate& reference) {
  if (estimate.included.size() != reference.included.size())
    throw std::invalid_argument("includes: size mismatch");
  for (std::size_t x = 0; x < estimate.included.size(); ++x)
    if (reference.included[x] && !estimate.included[x]) return false;
  return true;
}

bool same_members(const RiskSetEstimate& estimate, const RiskSetEstimate& reference) {
  return misclassification(estimate, reference) == 0;
}

SetMetrics evaluate(const std::vector<RiskSetEstimate>& estimates, const RiskSetEstimate& reference) {
  SetMetrics m;
  if (estimates.empty()) return m;
  for (const auto& est : estimates) {
    m.inclusion += includes(est, reference);
    m.identification += same_members(est, reference);
    m.misclassification += misclassification(est, reference);
  }
  const double n = static_cast<double>(estimates.size());
  m.inclusion /= n;
  m.identification /= n;
  m.misclassification /= n;
  return m;
}

}  // namespace srsi
