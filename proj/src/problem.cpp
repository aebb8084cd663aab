#include "srsi/problem.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace srsi {

double Problem::conditional_mean(int, const std::vector<ObservationSet>&,
                                 const JointInputModel&) const {
  throw std::logic_error(name() + ": no closed-form conditional mean");
}

namespace {

double scalar_mean(const ProbabilitySimplex& simplex, const ObservationSet& data) {
  const Eigen::VectorXd mean = simplex_mean(simplex, data);
  if (mean.size() != 1) throw std::invalid_argument("expected a scalar input source");
  return mean[0];
}

}  // namespace

Mm1kProblem::Mm1kProblem(Mm1kProblemConfig config) : config_(std::move(config)) {
  if (config_.min_capacity < 1 || config_.max_capacity < config_.min_capacity)
    throw std::invalid_argument("mm1k: bad capacity range");
  if (!(config_.cost_per_wait > 0.0) || !(config_.revenue > 0.0))
    throw std::invalid_argument("mm1k: cost and revenue must be positive");
  if (config_.sample_size < 1) throw std::invalid_argument("mm1k: sample size must be positive");
  if (!(config_.true_interarrival_mean > 0.0) || !(config_.true_service_mean > 0.0))
    throw std::invalid_argument("mm1k: true means must be positive");
}

int Mm1kProblem::num_solutions() const { return config_.max_capacity - config_.min_capacity + 1; }

Eigen::MatrixXd Mm1kProblem::solution_matrix() const {
  Eigen::MatrixXd xs(num_solutions(), 1);
  for (int x = 0; x < num_solutions(); ++x) xs(x, 0) = static_cast<double>(capacity(x));
  return xs;
}

std::string Mm1kProblem::solution_label(int x) const { return "k=" + std::to_string(capacity(x)); }

std::vector<char> Mm1kProblem::parametric_sources() const {
  const char p = config_.resample_support ? 0 : 1;
  return {p, p};
}

std::vector<ObservationSet> Mm1kProblem::generate_data(std::uint64_t seed) const {
  const double means[2] = {config_.true_interarrival_mean, config_.true_service_mean};
  std::vector<ObservationSet> out;
  for (int source = 0; source < 2; ++source) {
    RandomStream rng(derive_seed(seed, {stream_tag::data, static_cast<std::uint64_t>(source)}));
    std::vector<Eigen::VectorXd> draws(static_cast<std::size_t>(config_.sample_size));
    for (auto& v : draws) {
      v.resize(1);
      v[0] = rng.exponential(means[source]);
    }
    out.push_back(ObservationSet::from_raw(source, draws));
  }
  return out;
}

double Mm1kProblem::replicate(int x, const std::vector<ObservationSet>& data,
                              const JointInputModel& model, RandomStream& rng) const {
  const Mm1kRepParams params{config_.cost_per_wait, config_.revenue, config_.customers};
  if (config_.resample_support) {
    const auto values = [](const ObservationSet& set) {
      std::vector<double> v(set.support.size());
      for (std::size_t j = 0; j < v.size(); ++j) v[j] = set.support[j][0];
      return v;
    };
    const std::vector<double> inter = values(data[0]);
    const std::vector<double> svc = values(data[1]);
    const auto& w1 = model.sources[0].weights;
    const auto& w2 = model.sources[1].weights;
    return mm1k_replicate_empirical(
        capacity(x), inter, std::span<const double>(w1.data(), static_cast<std::size_t>(w1.size())),
        svc, std::span<const double>(w2.data(), static_cast<std::size_t>(w2.size())), params, rng);
  }
  const double theta1 = scalar_mean(model.sources[0], data[0]);
  const double theta2 = scalar_mean(model.sources[1], data[1]);
  return mm1k_replicate(capacity(x), theta1, theta2, params, rng);
}

double Mm1kProblem::conditional_mean(int x, const std::vector<ObservationSet>& data,
                                     const JointInputModel& model) const {
  if (config_.resample_support) return Problem::conditional_mean(x, data, model);
  const double theta1 = scalar_mean(model.sources[0], data[0]);
  const double theta2 = scalar_mean(model.sources[1], data[1]);
  return mm1k_analytic(capacity(x), theta1, theta2, config_.cost_per_wait, config_.revenue).cost;
}

std::vector<double> default_ambulance_frequency(int grid_side, int total_calls,
                                                std::uint64_t map_seed) {
  const int cells = grid_side * grid_side;
  std::vector<double> counts(static_cast<std::size_t>(cells), 0.0);
  // Four published counts; everything else is synthetic.
  const int busiest = 30;
  const std::pair<int, double> anchors[] = {{busiest, 40.0}, {6, 1.0}, {11, 1.0}, {15, 1.0}};
  double anchored = 0.0;
  for (const auto& [id, count] : anchors) {
    if (id > cells) continue;
    counts[static_cast<std::size_t>(id - 1)] = count;
    anchored += count;
  }
  const int remaining = total_calls - static_cast<int>(anchored);
  if (remaining < 0) throw std::invalid_argument("ambulance: total_calls below the anchored counts");

  // Spread the unpublished remainder over the non-anchor neighborhoods with
  // weight decaying in distance from the busiest one.
  std::vector<double> weights;
  std::vector<std::size_t> cells_idx;
  for (int id = 1; id <= cells; ++id) {
    if (counts[static_cast<std::size_t>(id - 1)] > 0.0) continue;
    const int d = manhattan_between(id, std::min(busiest, cells), grid_side);
    weights.push_back(std::exp(-0.5 * d));
    cells_idx.push_back(static_cast<std::size_t>(id - 1));
  }
  RandomStream rng(derive_seed(map_seed, {stream_tag::map_recipe}));
  for (int i = 0; i < remaining; ++i) counts[cells_idx[rng.categorical(weights)]] += 1.0;
  return counts;
}

AmbulanceProblem::AmbulanceProblem(AmbulanceProblemConfig config) : config_(std::move(config)) {
  if (config_.sim.grid_side < 1 || config_.sim.ambulances < 1)
    throw std::invalid_argument("ambulance: grid side and fleet size must be positive");
  const int cells = config_.sim.grid_side * config_.sim.grid_side;
  if (config_.frequency.empty())
    config_.frequency =
        default_ambulance_frequency(config_.sim.grid_side, config_.total_calls, config_.map_seed);
  if (static_cast<int>(config_.frequency.size()) != cells)
    throw std::invalid_argument("ambulance: frequency map must have one entry per neighborhood");
  double total = 0.0;
  for (double f : config_.frequency) {
    if (f < 0.0) throw std::invalid_argument("ambulance: negative frequency");
    total += f;
  }
  if (!(total > 0.0)) throw std::invalid_argument("ambulance: frequency map is empty");
}

int AmbulanceProblem::num_solutions() const {
  return config_.sim.grid_side * config_.sim.grid_side;
}

Eigen::MatrixXd AmbulanceProblem::solution_matrix() const {
  Eigen::MatrixXd xs(num_solutions(), 2);
  for (int x = 0; x < num_solutions(); ++x) {
    xs(x, 0) = static_cast<double>(x / config_.sim.grid_side);
    xs(x, 1) = static_cast<double>(x % config_.sim.grid_side);
  }
  return xs;
}

std::string AmbulanceProblem::solution_label(int x) const { return "nbhd=" + std::to_string(x + 1); }

std::vector<ObservationSet> AmbulanceProblem::generate_data(std::uint64_t seed) const {
  RandomStream rng(derive_seed(seed, {stream_tag::data, 0}));
  std::vector<Eigen::VectorXd> draws(static_cast<std::size_t>(config_.total_calls));
  for (auto& v : draws) {
    v.resize(1);
    v[0] = static_cast<double>(1 + rng.categorical(config_.frequency));
  }
  return {ObservationSet::from_raw(0, draws)};
}

double AmbulanceProblem::replicate(int x, const std::vector<ObservationSet>& data,
                                   const JointInputModel& model, RandomStream& rng) const {
  const ObservationSet& set = data[0];
  const auto& weights = model.sources[0].weights;
  std::vector<int> ids(set.support.size());
  for (std::size_t j = 0; j < ids.size(); ++j) ids[j] = static_cast<int>(set.support[j][0]);
  AmbulanceAudit audit;
  const double response = ambulance_replicate(
      config_.sim, x + 1,
      std::span<const double>(weights.data(), static_cast<std::size_t>(weights.size())), ids, rng,
      &audit);
  if (!audit.fleet_conserved || !audit.fcfs_respected)
    throw std::logic_error("ambulance: invariant violated during a replication");
  return response;
}

FixedDataProblem::FixedDataProblem(std::shared_ptr<const Problem> base,
                                   std::vector<ObservationSet> data)
    : base_(std::move(base)), data_(std::move(data)) {
  if (static_cast<int>(data_.size()) != base_->num_sources())
    throw std::invalid_argument(base_->name() + ": expected " +
                                std::to_string(base_->num_sources()) + " data sources, got " +
                                std::to_string(data_.size()));
}

}  // namespace srsi
