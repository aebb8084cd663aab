#pragma once

#include <Eigen/Core>
#include <span>

#include "srsi/rng.hpp"

namespace srsi {

// Closed-form steady-state quantities for a single-server queue with
// capacity k, exponential interarrival mean theta1 and service mean theta2.
// The two branches switch at |rho - 1| < 1e-12 with rho = theta2 / theta1.
struct Mm1kAnalytic {
  double balk_probability = 0.0;
  double expected_wait = 0.0;
  double cost = 0.0;  // cost_per_wait * wait - revenue * (1 - balk)
};

Mm1kAnalytic mm1k_analytic(int k, double theta1, double theta2, double cost_per_wait,
                           double revenue);

// Stationary number-in-system pmf over {0, ..., k}: proportional to rho^n,
// uniform on the equal-rates branch.
Eigen::VectorXd mm1k_steady_state_pmf(int k, double rho);

struct Mm1kRepParams {
  double cost_per_wait = 1.0;
  double revenue = 200.0;
  int customers = 2000;
};

// One replication: the system starts from a stationary draw, then `customers`
// arrivals flow through a capacity-aware Lindley recursion. Queue waits are
// averaged over admitted customers; revenue accrues per admitted customer
// across all arrivals.
double mm1k_replicate(int k, double theta1, double theta2, const Mm1kRepParams& params,
                      RandomStream& rng);

// Same recursion with interarrival and service times resampled from weighted
// empirical supports; the stationary initializer uses the mean-based rho.
double mm1k_replicate_empirical(int k, std::span<const double> inter_values,
                                std::span<const double> inter_weights,
                                std::span<const double> svc_values,
                                std::span<const double> svc_weights, const Mm1kRepParams& params,
                                RandomStream& rng);

}  // namespace srsi
