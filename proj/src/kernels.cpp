#include "srsi/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace srsi {

void KernelParams::validate(int solution_dim, int num_sources) const {
  if (!(tau_sq > 0.0)) throw std::invalid_argument("kernel: tau_sq must be positive");
  if (lambda.size() != solution_dim) throw std::invalid_argument("kernel: lambda length mismatch");
  if (vartheta.size() != num_sources) throw std::invalid_argument("kernel: vartheta length mismatch");
  if ((lambda.array() <= 0.0).any()) throw std::invalid_argument("kernel: lambda must be positive");
  if ((vartheta.array() <= 0.0).any()) throw std::invalid_argument("kernel: vartheta must be positive");
  if (!parametric.empty() && parametric.size() != static_cast<std::size_t>(num_sources))
    throw std::invalid_argument("kernel: parametric flag length mismatch");
}

double gamma_x(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& lambda) {
  if (x.size() != y.size() || x.size() != lambda.size())
    throw std::invalid_argument("gamma_x: dimension mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d / lambda[i];
  }
  return std::exp(-s);
}

DistanceTables DistanceTables::build(const std::vector<JointInputModel>& models,
                                     const std::vector<ObservationSet>& data, DivergenceKind kind,
                                     const std::vector<char>& parametric) {
  if (models.empty()) throw std::invalid_argument("distance tables: no models");
  const std::size_t num_sources = models.front().sources.size();
  if (data.size() != num_sources)
    throw std::invalid_argument("distance tables: data/model source count mismatch");
  const int b_count = static_cast<int>(models.size());
  DistanceTables tables;
  tables.per_source.resize(num_sources);
  for (std::size_t l = 0; l < num_sources; ++l) {
    const bool param = l < parametric.size() && parametric[l];
    Eigen::MatrixXd& t = tables.per_source[l];
    t.setZero(b_count, b_count);
    std::vector<Eigen::VectorXd> means;
    if (param) {
      means.reserve(models.size());
      for (const auto& m : models) means.push_back(simplex_mean(m.sources[l], data[l]));
    }
    for (int i = 0; i < b_count; ++i) {
      for (int j = i + 1; j < b_count; ++j) {
        const double d2 = param ? (means[static_cast<std::size_t>(i)] - means[static_cast<std::size_t>(j)]).squaredNorm()
                                : divergence(models[static_cast<std::size_t>(i)].sources[l],
                                             models[static_cast<std::size_t>(j)].sources[l], kind);
        t(i, j) = d2;
        t(j, i) = d2;
      }
    }
  }
  return tables;
}

double gamma_m(const DistanceTables& tables, int b1, int b2, const Eigen::VectorXd& vartheta) {
  if (vartheta.size() != static_cast<Eigen::Index>(tables.per_source.size()))
    throw std::invalid_argument("gamma_m: vartheta length mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < tables.per_source.size(); ++l)
    s += tables.per_source[l](b1, b2) / vartheta[static_cast<Eigen::Index>(l)];
  return std::exp(-s);
}

double gamma_m(const JointInputModel& a, const JointInputModel& b,
               const std::vector<ObservationSet>& data, const KernelParams& params) {
  if (a.sources.size() != b.sources.size())
    throw std::invalid_argument("gamma_m: source count mismatch");
  if (params.vartheta.size() != static_cast<Eigen::Index>(a.sources.size()))
    throw std::invalid_argument("gamma_m: vartheta length mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < a.sources.size(); ++l) {
    const bool param = l < params.parametric.size() && params.parametric[l];
    const double d2 = param ? (simplex_mean(a.sources[l], data[l]) - simplex_mean(b.sources[l], data[l])).squaredNorm()
                            : divergence(a.sources[l], b.sources[l], params.divergence);
    s += d2 / params.vartheta[static_cast<Eigen::Index>(l)];
  }
  return std::exp(-s);
}

Eigen::MatrixXd gamma_x_table(const Eigen::MatrixXd& solutions, const Eigen::VectorXd& lambda) {
  const Eigen::Index n = solutions.rows();
  Eigen::MatrixXd t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double g = gamma_x(solutions.row(i), solutions.row(j), lambda);
      t(i, j) = g;
      t(j, i) = g;
    }
  }
  return t;
}

Eigen::MatrixXd gamma_m_table(const DistanceTables& tables, const Eigen::VectorXd& vartheta) {
  if (tables.per_source.empty()) throw std::invalid_argument("gamma_m_table: no tables");
  const Eigen::Index b_count = tables.per_source.front().rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(b_count, b_count);
  for (std::size_t l = 0; l < tables.per_source.size(); ++l)
    sum += tables.per_source[l] / vartheta[static_cast<Eigen::Index>(l)];
  return (-sum.array()).exp();
}

double kernel_value(const PairIndex& a, const PairIndex& b, const KernelParams& params,
                    const Eigen::MatrixXd& solutions, const DistanceTables& tables) {
  const double gx = gamma_x(solutions.row(a.solution), solutions.row(b.solution), params.lambda);
  const double gm = gamma_m(tables, a.model, b.model, params.vartheta);
  return params.tau_sq * gx * gm;
}

Eigen::MatrixXd gram(const std::vector<PairIndex>& pairs, const KernelParams& params,
                     const Eigen::MatrixXd& solutions, const DistanceTables& tables) {
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel_value(pairs[static_cast<std::size_t>(i)],
                                    pairs[static_cast<std::size_t>(j)], params, solutions, tables);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("min_eigenvalue: eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

}  // namespace srsi
