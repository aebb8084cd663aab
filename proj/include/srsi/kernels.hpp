#pragma once

#include <Eigen/Core>
#include <vector>

#include "srsi/input_model.hpp"

namespace srsi {

// Address of one (solution, candidate distribution) pair on the grid.
struct PairIndex {
  int solution = 0;
  int model = 0;
  friend bool operator==(const PairIndex&, const PairIndex&) = default;
};

struct KernelParams {
  double tau_sq = 1.0;          // process variance, > 0
  Eigen::VectorXd lambda;       // per-coordinate solution lengthscales, > 0
  Eigen::VectorXd vartheta;     // per-source distribution lengthscales, > 0
  DivergenceKind divergence = DivergenceKind::squared_hellinger;
  std::vector<char> parametric;  // per-source: use squared distance of simplex means

  void validate(int solution_dim, int num_sources) const;
};

// Squared-exponential correlation over solution coordinates.
double gamma_x(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& lambda);

// Per-source squared distances between all candidate models, precomputed once
// so kernel evaluations inside the loop are table lookups. A parametric
// source uses the squared Euclidean distance of simplex means (the same
// quantity the simulators use as the source's parameter).
struct DistanceTables {
  std::vector<Eigen::MatrixXd> per_source;  // each B x B, symmetric, zero diagonal

  static DistanceTables build(const std::vector<JointInputModel>& models,
                              const std::vector<ObservationSet>& data, DivergenceKind kind,
                              const std::vector<char>& parametric);
};

// Distribution correlation from precomputed tables.
double gamma_m(const DistanceTables& tables, int b1, int b2, const Eigen::VectorXd& vartheta);

// Distribution correlation for models not on the grid (fresh posterior draws).
double gamma_m(const JointInputModel& a, const JointInputModel& b,
               const std::vector<ObservationSet>& data, const KernelParams& params);

// Full correlation tables for the fixed grid.
Eigen::MatrixXd gamma_x_table(const Eigen::MatrixXd& solutions, const Eigen::VectorXd& lambda);
Eigen::MatrixXd gamma_m_table(const DistanceTables& tables, const Eigen::VectorXd& vartheta);

// k((x,P),(x',P')) = tau^2 * gamma_x * gamma_m; strictly positive.
double kernel_value(const PairIndex& a, const PairIndex& b, const KernelParams& params,
                    const Eigen::MatrixXd& solutions, const DistanceTables& tables);

// Gram matrix over an arbitrary pair list.
Eigen::MatrixXd gram(const std::vector<PairIndex>& pairs, const KernelParams& params,
                     const Eigen::MatrixXd& solutions, const DistanceTables& tables);

// Smallest eigenvalue of a symmetric matrix (PSD diagnostics).
double min_eigenvalue(const Eigen::MatrixXd& sym);

}  // namespace srsi
