#include "srsi/mm1k.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace srsi {

namespace {
constexpr double kEqualRateTol = 1e-12;
}

Mm1kAnalytic mm1k_analytic(int k, double theta1, double theta2, double cost_per_wait,
                           double revenue) {
  if (k < 1) throw std::invalid_argument("mm1k: capacity must be at least 1");
  if (!(theta1 > 0.0) || !(theta2 > 0.0))
    throw std::invalid_argument("mm1k: means must be positive");
  const double rho = theta2 / theta1;
  Mm1kAnalytic out;
  if (std::abs(rho - 1.0) < kEqualRateTol) {
    out.balk_probability = 1.0 / (k + 1);
    out.expected_wait = 0.5 * (k + 1) * theta2;
  } else {
    const double rk = std::pow(rho, k);
    out.balk_probability = (1.0 - rho) * rk / (1.0 - rk * rho);
    out.expected_wait =
        theta2 * ((1.0 - (k + 1) * rk + k * rk * rho) / ((1.0 - rho) * (1.0 - rk)) - 1.0);
  }
  out.cost = cost_per_wait * out.expected_wait - revenue * (1.0 - out.balk_probability);
  return out;
}

Eigen::VectorXd mm1k_steady_state_pmf(int k, double rho) {
  if (k < 1) throw std::invalid_argument("mm1k: capacity must be at least 1");
  if (!(rho > 0.0)) throw std::invalid_argument("mm1k: rho must be positive");
  Eigen::VectorXd pmf(k + 1);
  if (std::abs(rho - 1.0) < kEqualRateTol) {
    pmf.setConstant(1.0 / (k + 1));
    return pmf;
  }
  double p = 1.0;
  for (int n = 0; n <= k; ++n) {
    pmf[n] = p;
    p *= rho;
  }
  pmf /= pmf.sum();
  return pmf;
}

namespace {

template <typename DrawInter, typename DrawService>
double replicate_core(int k, double rho, const Mm1kRepParams& params, RandomStream& rng,
                      DrawInter&& draw_inter, DrawService&& draw_service) {
  if (k < 1) throw std::invalid_argument("mm1k: capacity must be at least 1");
  if (params.customers < 1) throw std::invalid_argument("mm1k: need at least one customer");

  const Eigen::VectorXd pmf = mm1k_steady_state_pmf(k, rho);
  const int initial = static_cast<int>(
      rng.categorical(std::span<const double>(pmf.data(), static_cast<std::size_t>(pmf.size()))));

  // Departure times of admitted, not-yet-departed customers; nondecreasing
  // because service is single-server FIFO. Customers present at time 0 get
  // fresh service draws (exact for the exponential case by memorylessness).
  std::deque<double> departures;
  double last_departure = 0.0;
  for (int j = 0; j < initial; ++j) {
    last_departure += draw_service(rng);
    departures.push_back(last_departure);
  }

  double now = 0.0, wait_sum = 0.0;
  long admitted = 0;
  for (int i = 0; i < params.customers; ++i) {
    now += draw_inter(rng);
    while (!departures.empty() && departures.front() <= now) departures.pop_front();
    if (static_cast<int>(departures.size()) >= k) continue;  // full system: balk
    const double start = departures.empty() ? now : std::max(now, departures.back());
    wait_sum += start - now;
    departures.push_back(start + draw_service(rng));
    ++admitted;
  }
  const double mean_wait = admitted > 0 ? wait_sum / static_cast<double>(admitted) : 0.0;
  const double served_fraction = static_cast<double>(admitted) / params.customers;
  return params.cost_per_wait * mean_wait - params.revenue * served_fraction;
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size() || values.empty())
    throw std::invalid_argument("mm1k: support/weight size mismatch");
  double total = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) throw std::invalid_argument("mm1k: times must be nonnegative");
    total += weights[i];
    sum += weights[i] * values[i];
  }
  if (!(total > 0.0) || !(sum > 0.0))
    throw std::invalid_argument("mm1k: support must have positive weighted mean");
  return sum / total;
}

}  // namespace

double mm1k_replicate(int k, double theta1, double theta2, const Mm1kRepParams& params,
                      RandomStream& rng) {
  if (!(theta1 > 0.0) || !(theta2 > 0.0))
    throw std::invalid_argument("mm1k: means must be positive");
  return replicate_core(
      k, theta2 / theta1, params, rng, [&](RandomStream& r) { return r.exponential(theta1); },
      [&](RandomStream& r) { return r.exponential(theta2); });
}

double mm1k_replicate_empirical(int k, std::span<const double> inter_values,
                                std::span<const double> inter_weights,
                                std::span<const double> svc_values,
                                std::span<const double> svc_weights, const Mm1kRepParams& params,
                                RandomStream& rng) {
  const double rho = weighted_mean(svc_values, svc_weights) / weighted_mean(inter_values, inter_weights);
  return replicate_core(
      k, rho, params, rng,
      [&](RandomStream& r) { return inter_values[r.categorical(inter_weights)]; },
      [&](RandomStream& r) { return svc_values[r.categorical(svc_weights)]; });
}

}  // namespace srsi
