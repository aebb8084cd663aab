#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "srsi/rng.hpp"

namespace srsi {

// Real-world sample for one input source, aggregated over its distinct
// support values. Ties are detected by bit pattern of the parsed doubles, so
// equal canonical decimal serializations always collapse to one support row.
struct ObservationSet {
  int source_index = 0;
  std::vector<Eigen::VectorXd> support;  // distinct values, first-occurrence order
  std::vector<std::uint64_t> counts;     // c_j >= 1, aligned with support
  std::uint64_t total = 0;               // m = sum of counts

  static ObservationSet from_raw(int source_index, const std::vector<Eigen::VectorXd>& observations);
  static ObservationSet from_counts(int source_index, const std::vector<Eigen::VectorXd>& values,
                                    const std::vector<std::uint64_t>& counts);

  int dim() const { return support.empty() ? 0 : static_cast<int>(support.front().size()); }
  std::size_t support_size() const { return support.size(); }
};

// Dirichlet posterior over the simplex of weights on the observed support.
struct DirichletPosterior {
  ObservationSet data;
  Eigen::VectorXd concentration;  // c_j + kappa_j
};

// One weight vector on a source's support; always sums to 1.
struct ProbabilitySimplex {
  Eigen::VectorXd weights;
};

// One candidate distribution per source.
struct JointInputModel {
  std::vector<ProbabilitySimplex> sources;
};

// Posterior with concentration c_j + kappa for every support value.
DirichletPosterior build_posterior(const ObservationSet& data, double kappa);
DirichletPosterior build_posterior(const ObservationSet& data, const Eigen::VectorXd& kappa);

// Mode (conc_j - 1) / sum_i (conc_i - 1); with kappa = 1 this is c_j / m.
ProbabilitySimplex map_simplex(const DirichletPosterior& posterior);

// Normalized Gamma(conc_j, 1) draws.
ProbabilitySimplex sample_simplex(const DirichletPosterior& posterior, RandomStream& rng);

// B independent draws from the product posterior, sources independent.
std::vector<JointInputModel> sample_joint(const std::vector<DirichletPosterior>& posteriors,
                                          int count, RandomStream& rng);

// Mean of the distribution: sum_j w_j * support_j.
Eigen::VectorXd simplex_mean(const ProbabilitySimplex& simplex, const ObservationSet& data);

enum class DivergenceKind { total_variation, squared_hellinger, jensen_shannon };

DivergenceKind divergence_kind_from_string(const std::string& name);
std::string to_string(DivergenceKind kind);

// Squared distance D^2 between two weight vectors on a shared support.
double divergence(const ProbabilitySimplex& p, const ProbabilitySimplex& q, DivergenceKind kind);

// One observation per line; scalars, or comma-separated vectors. Blank lines
// are ignored. Every line must have the same dimension.
std::vector<Eigen::VectorXd> read_observations(const std::string& path);

// Pre-aggregated "value,count" lines (vector values allowed: the last field
// is the count).
void read_counts(const std::string& path, std::vector<Eigen::VectorXd>& values,
                 std::vector<std::uint64_t>& counts);

}  // namespace srsi
