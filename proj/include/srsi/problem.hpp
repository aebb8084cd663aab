#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "srsi/ambulance.hpp"
#include "srsi/input_model.hpp"
#include "srsi/mm1k.hpp"
#include "srsi/rng.hpp"

namespace srsi {

// A finite-decision stochastic problem whose simulator consumes, per
// replication, one candidate distribution per input source. The optimization
// direction is minimization throughout.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual int num_solutions() const = 0;
  // Solution coordinates driving the solution kernel, one row per solution.
  virtual Eigen::MatrixXd solution_matrix() const = 0;
  virtual std::string solution_label(int x) const = 0;

  virtual int num_sources() const = 0;
  // Per-source flag: the simulator consumes only the distribution's mean, so
  // distribution distances reduce to mean distances.
  virtual std::vector<char> parametric_sources() const = 0;

  // Synthetic real-world sample, one set per source; deterministic in seed.
  virtual std::vector<ObservationSet> generate_data(std::uint64_t seed) const = 0;

  virtual double replicate(int x, const std::vector<ObservationSet>& data,
                           const JointInputModel& model, RandomStream& rng) const = 0;

  virtual bool has_conditional_mean() const { return false; }
  // E[Y(x; P) | P] in closed form; throws when unavailable.
  virtual double conditional_mean(int x, const std::vector<ObservationSet>& data,
                                  const JointInputModel& model) const;
};

// Single-server queue capacity selection. Solutions are capacities
// min_capacity..max_capacity; sources are interarrival (0) and service (1)
// time samples. The default replication path draws exponentials at the
// candidate distribution's mean, matching the closed-form conditional mean;
// resample_support switches to drawing the weighted support directly.
struct Mm1kProblemConfig {
  int min_capacity = 1;
  int max_capacity = 50;
  double cost_per_wait = 1.0;
  double revenue = 200.0;
  int customers = 2000;
  int sample_size = 100;  // observations per source
  double true_interarrival_mean = 1.0;
  double true_service_mean = 1.1;
  bool resample_support = false;
};

class Mm1kProblem : public Problem {
 public:
  explicit Mm1kProblem(Mm1kProblemConfig config);

  std::string name() const override { return "mm1k"; }
  int num_solutions() const override;
  Eigen::MatrixXd solution_matrix() const override;
  std::string solution_label(int x) const override;
  int num_sources() const override { return 2; }
  std::vector<char> parametric_sources() const override;
  std::vector<ObservationSet> generate_data(std::uint64_t seed) const override;
  double replicate(int x, const std::vector<ObservationSet>& data, const JointInputModel& model,
                   RandomStream& rng) const override;
  bool has_conditional_mean() const override { return !config_.resample_support; }
  double conditional_mean(int x, const std::vector<ObservationSet>& data,
                          const JointInputModel& model) const override;

  int capacity(int x) const { return config_.min_capacity + x; }
  const Mm1kProblemConfig& config() const { return config_; }

 private:
  Mm1kProblemConfig config_;
};

// Dispatching-center placement on a square grid. Solutions are the
// neighborhoods; the single source is the call-location distribution over
// neighborhood ids. The synthetic frequency map fixes four published counts
// and spreads the remaining calls around the busiest neighborhood with a
// seeded draw, so the problem is qualitative rather than a data replica.
struct AmbulanceProblemConfig {
  AmbulanceParams sim;
  int total_calls = 331;
  std::vector<double> frequency;  // 36 counts; empty selects the default map
  std::uint64_t map_seed = 2026;
};

std::vector<double> default_ambulance_frequency(int grid_side, int total_calls,
                                                std::uint64_t map_seed);

class AmbulanceProblem : public Problem {
 public:
  explicit AmbulanceProblem(AmbulanceProblemConfig config);

  std::string name() const override { return "ambulance"; }
  int num_solutions() const override;
  Eigen::MatrixXd solution_matrix() const override;
  std::string solution_label(int x) const override;
  int num_sources() const override { return 1; }
  std::vector<char> parametric_sources() const override { return {false}; }
  std::vector<ObservationSet> generate_data(std::uint64_t seed) const override;
  double replicate(int x, const std::vector<ObservationSet>& data, const JointInputModel& model,
                   RandomStream& rng) const override;

  const AmbulanceProblemConfig& config() const { return config_; }
  const std::vector<double>& frequency() const { return config_.frequency; }

 private:
  AmbulanceProblemConfig config_;
};

// Decorator substituting externally supplied observations for the synthetic
// data generator; everything else delegates.
class FixedDataProblem : public Problem {
 public:
  FixedDataProblem(std::shared_ptr<const Problem> base, std::vector<ObservationSet> data);

  std::string name() const override { return base_->name(); }
  int num_solutions() const override { return base_->num_solutions(); }
  Eigen::MatrixXd solution_matrix() const override { return base_->solution_matrix(); }
  std::string solution_label(int x) const override { return base_->solution_label(x); }
  int num_sources() const override { return base_->num_sources(); }
  std::vector<char> parametric_sources() const override { return base_->parametric_sources(); }
  std::vector<ObservationSet> generate_data(std::uint64_t) const override { return data_; }
  double replicate(int x, const std::vector<ObservationSet>& data, const JointInputModel& model,
                   RandomStream& rng) const override {
    return base_->replicate(x, data, model, rng);
  }
  bool has_conditional_mean() const override { return base_->has_conditional_mean(); }
  double conditional_mean(int x, const std::vector<ObservationSet>& data,
                          const JointInputModel& model) const override {
    return base_->conditional_mean(x, data, model);
  }

 private:
  std::shared_ptr<const Problem> base_;
  std::vector<ObservationSet> data_;
};

}  // namespace srsi
