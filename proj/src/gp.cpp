#include "srsi/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace srsi {

namespace {

std::uint64_t pack(const PairIndex& p) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.solution)) << 32) |
         static_cast<std::uint32_t>(p.model);
}

// One retry with scaled jitter on the diagonal, then a hard error.
Eigen::LLT<Eigen::MatrixXd> llt_with_jitter(Eigen::MatrixXd a, double jitter) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  a.diagonal().array() += jitter;
  llt.compute(a);
  if (llt.info() == Eigen::Success) return llt;
  throw std::runtime_error("covariance factorization failed even with jitter");
}

}  // namespace

std::size_t SimulationLog::merge_batch(const PairIndex& pair, const RunningStats& batch) {
  if (batch.count == 0) throw std::invalid_argument("merge_batch: empty batch");
  if (auto idx = find(pair)) {
    rows_[*idx].stats.merge(batch);
    return *idx;
  }
  rows_.push_back(LogRow{pair, batch});
  return rows_.size() - 1;
}

void SimulationLog::append_row(const PairIndex& pair, const RunningStats& stats) {
  rows_.push_back(LogRow{pair, stats});
}

std::optional<std::size_t> SimulationLog::find(const PairIndex& pair) const {
  // Linear scan kept simple because callers in the hot loop cache indices;
  // log sizes stay in the low thousands.
  const std::uint64_t key = pack(pair);
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (pack(rows_[i].pair) == key) return i;
  return std::nullopt;
}

std::uint64_t SimulationLog::total_replications() const {
  std::uint64_t total = 0;
  for (const auto& row : rows_) total += row.stats.count;
  return total;
}

double plugin_noise(const SimulationLog& log, const PairIndex& pair) {
  if (log.size() == 0) throw std::invalid_argument("plugin_noise: empty log");
  if (auto idx = log.find(pair)) return log.rows()[*idx].stats.variance();
  double sum = 0.0;
  int n = 0;
  for (const auto& row : log.rows()) {
    if (row.pair.solution == pair.solution) {
      sum += row.stats.variance();
      ++n;
    }
  }
  if (n > 0) return sum / n;
  for (const auto& row : log.rows()) sum += row.stats.variance();
  return sum / static_cast<double>(log.size());
}

namespace {

struct MleWorkspace {
  Eigen::VectorXd y;
  Eigen::VectorXd noise;
  std::vector<Eigen::MatrixXd> dist_x;  // squared coordinate distances, 1 entry if shared
  std::vector<Eigen::MatrixXd> dist_m;  // per-source squared distribution distances
  double var_y = 0.0;
};

// Negative profile log-likelihood; beta0 is profiled out in closed form.
double negative_profile_ll(const MleWorkspace& w, double tau_sq, const Eigen::VectorXd& lambda,
                           const Eigen::VectorXd& vartheta, double* beta0_out = nullptr) {
  const Eigen::Index n = w.y.size();
  Eigen::MatrixXd expo = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t s = 0; s < w.dist_x.size(); ++s)
    expo += w.dist_x[s] / lambda[static_cast<Eigen::Index>(s)];
  for (std::size_t l = 0; l < w.dist_m.size(); ++l)
    expo += w.dist_m[l] / vartheta[static_cast<Eigen::Index>(l)];
  Eigen::MatrixXd sigma = tau_sq * (-expo.array()).exp().matrix();
  sigma.diagonal() += w.noise;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd ay = llt.solve(w.y);
  const Eigen::VectorXd a1 = llt.solve(ones);
  const double denom = ones.dot(a1);
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  const double beta0 = ones.dot(ay) / denom;
  if (beta0_out) *beta0_out = beta0;
  const Eigen::VectorXd r = w.y - beta0 * ones;
  const double quad = r.dot(llt.solve(r));
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double nll = 0.5 * (logdet + quad);
  return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
}

// Golden-section minimization on [lo, hi].
template <typename F>
double golden_section(F&& f, double lo, double hi, double tol) {
  const double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

GpFit fit_mle(const SimulationLog& log, const Eigen::MatrixXd& solutions,
              const DistanceTables& tables, DivergenceKind kind,
              const std::vector<char>& parametric, const MleOptions& options) {
  const Eigen::Index n = static_cast<Eigen::Index>(log.size());
  if (n < 2) throw std::invalid_argument("fit_mle: need at least two design rows");
  const int dim = static_cast<int>(solutions.cols());
  const std::size_t num_sources = tables.per_source.size();

  MleWorkspace w;
  w.y.resize(n);
  w.noise.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = log.rows()[static_cast<std::size_t>(i)];
    if (row.stats.count < 2) throw std::invalid_argument("fit_mle: every pair needs r >= 2");
    w.y[i] = row.stats.mean;
    w.noise[i] = row.stats.variance() / static_cast<double>(row.stats.count);
  }
  const double mean_y = w.y.mean();
  w.var_y = std::max((w.y.array() - mean_y).square().sum() / std::max<double>(1.0, n - 1), 1e-12);

  const int lambda_count = options.share_lambda ? 1 : dim;
  w.dist_x.assign(static_cast<std::size_t>(lambda_count), Eigen::MatrixXd::Zero(n, n));
  for (int s = 0; s < dim; ++s) {
    Eigen::MatrixXd& target = w.dist_x[options.share_lambda ? 0 : static_cast<std::size_t>(s)];
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = solutions(log.rows()[static_cast<std::size_t>(i)].pair.solution, s) -
                         solutions(log.rows()[static_cast<std::size_t>(j)].pair.solution, s);
        target(i, j) += d * d;
        target(j, i) += d * d;
      }
    }
  }
  w.dist_m.assign(num_sources, Eigen::MatrixXd::Zero(n, n));
  for (std::size_t l = 0; l < num_sources; ++l) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = tables.per_source[l](log.rows()[static_cast<std::size_t>(i)].pair.model,
                                              log.rows()[static_cast<std::size_t>(j)].pair.model);
        w.dist_m[l](i, j) = d;
        w.dist_m[l](j, i) = d;
      }
    }
  }

  const int num_params = 1 + lambda_count + static_cast<int>(num_sources);
  const double scale_lo = std::log(1e-4), scale_hi = std::log(1e4);
  const double tau_lo = std::log(1e-6 * w.var_y), tau_hi = std::log(1e3 * w.var_y);
  auto lower = [&](int p) { return p == 0 ? tau_lo : scale_lo; };
  auto upper = [&](int p) { return p == 0 ? tau_hi : scale_hi; };

  auto objective = [&](const Eigen::VectorXd& logp) {
    const double tau_sq = std::exp(logp[0]);
    Eigen::VectorXd lam_obj(lambda_count);  // matches the dist_x layout
    for (int s = 0; s < lambda_count; ++s) lam_obj[s] = std::exp(logp[1 + s]);
    Eigen::VectorXd vartheta(static_cast<Eigen::Index>(num_sources));
    for (std::size_t l = 0; l < num_sources; ++l)
      vartheta[static_cast<Eigen::Index>(l)] = std::exp(logp[1 + lambda_count + static_cast<int>(l)]);
    return negative_profile_ll(w, tau_sq, lam_obj, vartheta);
  };

  // Heuristic center: characteristic squared distances.
  Eigen::VectorXd center(num_params);
  center[0] = std::log(w.var_y);
  for (int s = 0; s < lambda_count; ++s) {
    const double m = w.dist_x[static_cast<std::size_t>(s)].sum() / std::max(1.0, double(n) * double(n - 1));
    center[1 + s] = std::log(std::clamp(std::max(m, 1e-3), 1e-4, 1e4));
  }
  for (std::size_t l = 0; l < num_sources; ++l) {
    const double m = w.dist_m[l].sum() / std::max(1.0, double(n) * double(n - 1));
    center[1 + lambda_count + static_cast<Eigen::Index>(l)] =
        std::log(std::clamp(std::max(m, 1e-3), 1e-4, 1e4));
  }
  center[0] = std::clamp(center[0], tau_lo, tau_hi);

  Eigen::VectorXd best_logp;
  double best_val = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    Eigen::VectorXd logp(num_params);
    if (restart == 0) {
      logp = center;
    } else {
      RandomStream rs(derive_seed(options.seed, {0x6d6c65ULL, static_cast<std::uint64_t>(restart)}));
      for (int p = 0; p < num_params; ++p)
        logp[p] = lower(p) + rs.uniform01() * (upper(p) - lower(p));
    }
    double current = objective(logp);
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
      const double before = current;
      for (int p = 0; p < num_params; ++p) {
        auto slice = [&](double value) {
          Eigen::VectorXd probe = logp;
          probe[p] = value;
          return objective(probe);
        };
        const double v = golden_section(slice, lower(p), upper(p), 1e-4);
        const double fv = slice(v);
        if (fv < current) {
          logp[p] = v;
          current = fv;
        }
      }
      if (before - current < options.tol) break;
    }
    if (current < best_val) {
      best_val = current;
      best_logp = logp;
    }
  }
  if (!std::isfinite(best_val)) throw std::runtime_error("fit_mle: likelihood not finite anywhere");

  GpFit fit;
  fit.params.tau_sq = std::exp(best_logp[0]);
  fit.params.lambda.resize(dim);
  for (int s = 0; s < dim; ++s)
    fit.params.lambda[s] = std::exp(best_logp[1 + (options.share_lambda ? 0 : s)]);
  fit.params.vartheta.resize(static_cast<Eigen::Index>(num_sources));
  for (std::size_t l = 0; l < num_sources; ++l)
    fit.params.vartheta[static_cast<Eigen::Index>(l)] =
        std::exp(best_logp[1 + lambda_count + static_cast<int>(l)]);
  fit.params.divergence = kind;
  fit.params.parametric = parametric;

  Eigen::VectorXd lam_obj(lambda_count);
  for (int s = 0; s < lambda_count; ++s) lam_obj[s] = std::exp(best_logp[1 + s]);
  Eigen::VectorXd theta(static_cast<Eigen::Index>(num_sources));
  for (std::size_t l = 0; l < num_sources; ++l)
    theta[static_cast<Eigen::Index>(l)] = fit.params.vartheta[static_cast<Eigen::Index>(l)];
  double beta0 = 0.0;
  const double check = negative_profile_ll(w, fit.params.tau_sq, lam_obj, theta, &beta0);
  fit.beta0 = beta0;
  fit.log_likelihood = -check;
  return fit;
}

void posterior(const SimulationLog& log, double beta0, const KernelParams& params,
               const Eigen::MatrixXd& solutions, const DistanceTables& tables,
               const std::vector<PairIndex>& queries, Eigen::VectorXd& mean,
               Eigen::MatrixXd& cov) {
  const Eigen::Index n = static_cast<Eigen::Index>(log.size());
  const Eigen::Index q = static_cast<Eigen::Index>(queries.size());
  if (n == 0) {
    mean = Eigen::VectorXd::Constant(q, beta0);
    cov.resize(q, q);
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = i; j < q; ++j) {
        const double k = kernel_value(queries[static_cast<std::size_t>(i)],
                                      queries[static_cast<std::size_t>(j)], params, solutions,
                                      tables);
        cov(i, j) = k;
        cov(j, i) = k;
      }
    return;
  }
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ri = log.rows()[static_cast<std::size_t>(i)];
    y[i] = ri.stats.mean;
    for (Eigen::Index j = i; j < n; ++j) {
      const auto& rj = log.rows()[static_cast<std::size_t>(j)];
      const double k = kernel_value(ri.pair, rj.pair, params, solutions, tables);
      a(i, j) = k;
      a(j, i) = k;
    }
    a(i, i) += ri.stats.variance() / static_cast<double>(ri.stats.count);
  }
  Eigen::LLT<Eigen::MatrixXd> llt = llt_with_jitter(std::move(a), 1e-8 * params.tau_sq);

  Eigen::MatrixXd cross(q, n);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cross(i, j) = kernel_value(queries[static_cast<std::size_t>(i)],
                                 log.rows()[static_cast<std::size_t>(j)].pair, params, solutions,
                                 tables);
  Eigen::MatrixXd prior(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = i; j < q; ++j) {
      const double k = kernel_value(queries[static_cast<std::size_t>(i)],
                                    queries[static_cast<std::size_t>(j)], params, solutions, tables);
      prior(i, j) = k;
      prior(j, i) = k;
    }

  const Eigen::VectorXd resid = y.array() - beta0;
  mean = beta0 + (cross * llt.solve(resid)).array();
  cov = prior - cross * llt.solve(cross.transpose());
  cov = 0.5 * (cov + cov.transpose()).eval();
}

GpModel::GpModel(Eigen::MatrixXd solutions, std::vector<JointInputModel> models,
                 std::vector<ObservationSet> data, GpFit fit)
    : solutions_(std::move(solutions)),
      models_(std::move(models)),
      data_(std::move(data)),
      fit_(std::move(fit)) {
  fit_.params.validate(static_cast<int>(solutions_.cols()), static_cast<int>(data_.size()));
  tables_ = DistanceTables::build(models_, data_, fit_.params.divergence, fit_.params.parametric);
  gx_ = gamma_x_table(solutions_, fit_.params.lambda);
  gm_ = gamma_m_table(tables_, fit_.params.vartheta);
}

void GpModel::set_log(SimulationLog log) {
  log_ = std::move(log);
  built_ = false;
}

Eigen::VectorXd GpModel::prior_cross_column(const PairIndex& pair) const {
  const int xs = num_solutions(), bs = num_models();
  Eigen::VectorXd col(static_cast<Eigen::Index>(xs) * bs);
  for (int x = 0; x < xs; ++x) {
    const double base = fit_.params.tau_sq * gx_(x, pair.solution);
    for (int b = 0; b < bs; ++b) col[static_cast<Eigen::Index>(x) * bs + b] = base * gm_(b, pair.model);
  }
  return col;
}

void GpModel::rebuild_design_matrices() {
  const Eigen::Index n = static_cast<Eigen::Index>(log_.size());
  const Eigen::Index total = static_cast<Eigen::Index>(num_solutions()) * num_models();
  k_.resize(total, n);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& rj = log_.rows()[static_cast<std::size_t>(j)];
    k_.col(j) = prior_cross_column(rj.pair);
    for (Eigen::Index i = 0; i <= j; ++i) {
      const auto& ri = log_.rows()[static_cast<std::size_t>(i)];
      const double kv = fit_.params.tau_sq * gx_(ri.pair.solution, rj.pair.solution) *
                        gm_(ri.pair.model, rj.pair.model);
      a(i, j) = kv;
      a(j, i) = kv;
    }
    a(j, j) += rj.stats.variance() / static_cast<double>(rj.stats.count);
  }
  Eigen::LLT<Eigen::MatrixXd> llt = llt_with_jitter(std::move(a), 1e-8 * fit_.params.tau_sq);
  a_inv_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
}

double GpModel::refresh() {
  if (log_.size() == 0) throw std::invalid_argument("refresh: empty log");
  rebuild_design_matrices();
  const Eigen::Index n = static_cast<Eigen::Index>(log_.size());
  const int xs = num_solutions(), bs = num_models();
  const Eigen::Index total = static_cast<Eigen::Index>(xs) * bs;

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = log_.rows()[static_cast<std::size_t>(i)].stats.mean;
  const Eigen::VectorXd alpha = a_inv_ * (y.array() - fit_.beta0).matrix();
  Eigen::VectorXd mu_new = fit_.beta0 + (k_ * alpha).array();

  Eigen::MatrixXd v_new(total, total);
  for (int xi = 0; xi < xs; ++xi)
    for (int xj = 0; xj < xs; ++xj)
      v_new.block(static_cast<Eigen::Index>(xi) * bs, static_cast<Eigen::Index>(xj) * bs, bs, bs) =
          (fit_.params.tau_sq * gx_(xi, xj)) * gm_;
  const Eigen::MatrixXd m = a_inv_ * k_.transpose();
  v_new.noalias() -= k_ * m;
  v_new = 0.5 * (v_new + v_new.transpose()).eval();

  double drift = 0.0;
  if (built_) {
    const double mu_scale = std::max(mu_new.norm(), 1e-300);
    const double v_scale = std::max(v_new.norm(), 1e-300);
    drift = std::max((mu_ - mu_new).norm() / mu_scale, (v_ - v_new).norm() / v_scale);
  }
  mu_ = std::move(mu_new);
  v_ = std::move(v_new);
  built_ = true;
  return drift;
}

void GpModel::observe(const PairIndex& pair, const RunningStats& batch) {
  if (!built_) throw std::logic_error("observe: posterior not built yet");
  if (batch.count == 0) throw std::invalid_argument("observe: empty batch");
  const Eigen::Index q = flat(pair);
  const auto existing = log_.find(pair);

  if (!existing) {
    const double s = batch.variance() / static_cast<double>(batch.count);
    const double denom = s + v_(q, q);
    if (!(denom > 0.0)) throw std::runtime_error("observe: numerically degenerate update");
    const Eigen::VectorXd col = v_.col(q);
    mu_ += col * ((batch.mean - mu_[q]) / denom);
    v_.noalias() -= col * (col.transpose() / denom);

    // Grow the design-side matrices: cross column, then blocked inverse.
    const Eigen::Index n = static_cast<Eigen::Index>(log_.size());
    const Eigen::VectorXd cross = prior_cross_column(pair);
    Eigen::VectorXd b(n);
    for (Eigen::Index j = 0; j < n; ++j)
      b[j] = cross[flat(log_.rows()[static_cast<std::size_t>(j)].pair)];
    const Eigen::VectorXd u = a_inv_ * b;
    const double schur = fit_.params.tau_sq + s - b.dot(u);
    if (!(schur > 0.0)) throw std::runtime_error("observe: design system lost positive definiteness");

    Eigen::MatrixXd a_inv_new(n + 1, n + 1);
    a_inv_new.topLeftCorner(n, n) = a_inv_ + (u * u.transpose()) / schur;
    a_inv_new.topRightCorner(n, 1) = -u / schur;
    a_inv_new.bottomLeftCorner(1, n) = (-u / schur).transpose();
    a_inv_new(n, n) = 1.0 / schur;
    a_inv_ = std::move(a_inv_new);

    k_.conservativeResize(Eigen::NoChange, n + 1);
    k_.col(n) = cross;
    log_.merge_batch(pair, batch);
    return;
  }

  // Re-sampled pair: merge statistics, then apply the exact correction for
  // the changed noise diagonal entry and refresh the mean.
  const std::size_t i = *existing;
  const auto& before = log_.rows()[i].stats;
  const double s_old = before.variance() / static_cast<double>(before.count);
  log_.merge_batch(pair, batch);
  const auto& merged = log_.rows()[i].stats;
  const double s_new = merged.variance() / static_cast<double>(merged.count);
  const double delta = s_new - s_old;

  const Eigen::Index nrows = static_cast<Eigen::Index>(log_.size());
  if (delta != 0.0) {
    const Eigen::VectorXd u = a_inv_.col(static_cast<Eigen::Index>(i));
    const double denom = 1.0 + delta * u[static_cast<Eigen::Index>(i)];
    if (!(denom > 0.0)) throw std::runtime_error("observe: noise correction lost positive definiteness");
    const double factor = delta / denom;
    const Eigen::VectorXd g = k_ * u;
    a_inv_.noalias() -= factor * (u * u.transpose());
    v_.noalias() += factor * (g * g.transpose());
  }
  Eigen::VectorXd y(nrows);
  for (Eigen::Index j = 0; j < nrows; ++j) y[j] = log_.rows()[static_cast<std::size_t>(j)].stats.mean;
  const Eigen::VectorXd alpha = a_inv_ * (y.array() - fit_.beta0).matrix();
  mu_ = fit_.beta0 + (k_ * alpha).array();
}

double GpModel::sigma_diff(int xhat, int x, int b) const {
  if (x == xhat) return 0.0;
  const int qh = flat(xhat, b), qx = flat(x, b);
  const double s2 = v_(qh, qh) - 2.0 * v_(qh, qx) + v_(qx, qx);
  return s2 > 0.0 ? std::sqrt(s2) : 0.0;
}

Rank1Prediction rank1_predict(const GpModel& gp, const PairIndex& pair, int reps) {
  if (reps < 1) throw std::invalid_argument("rank1_predict: reps must be positive");
  const Eigen::Index q = gp.flat(pair);
  const double vhat = gp.plugin(pair);
  const double denom = vhat / reps + gp.v()(q, q);
  if (!(denom > 0.0)) throw std::runtime_error("rank1_predict: degenerate denominator");
  Rank1Prediction out;
  const Eigen::VectorXd col = gp.v().col(q);
  out.mean_sd = col.cwiseAbs() / std::sqrt(denom);
  out.v_next = gp.v();
  out.v_next.noalias() -= col * (col.transpose() / denom);
  return out;
}

PairwiseFactor pairwise_factor(const GpModel& gp, const PairIndex& first, const PairIndex& second,
                               int reps) {
  if (reps < 1) throw std::invalid_argument("pairwise_factor: reps must be positive");
  const Eigen::Index q1 = gp.flat(first), q2 = gp.flat(second);
  const double v1 = gp.plugin(first), v2 = gp.plugin(second);
  if (!(v1 > 0.0) || !(v2 > 0.0))
    throw std::runtime_error("pairwise_factor: nonpositive plug-in noise");
  const double r = static_cast<double>(reps);
  const double m11 = 1.0 + r * std::max(0.0, gp.v()(q1, q1)) / v1;
  const double m22 = 1.0 + r * std::max(0.0, gp.v()(q2, q2)) / v2;
  const double m12 = r * gp.v()(q1, q2) / std::sqrt(v1 * v2);
  PairwiseFactor f;
  f.scale1 = std::sqrt(r / v1);
  f.scale2 = std::sqrt(r / v2);
  f.d11 = std::sqrt(m11);
  f.l21 = m12 / f.d11;
  double t = m22 - f.l21 * f.l21;
  if (t <= 0.0) {
    // Exact algebra keeps t >= 1/m11; only floating-point drift can push it
    // slightly below zero.
    if (t < -1e-9 * m22) throw std::runtime_error("pairwise_factor: 2x2 system not positive definite");
    t = 1e-12 * m11;
  }
  f.d22 = std::sqrt(t);
  return f;
}

Rank2Prediction rank2_predict(const GpModel& gp, const PairIndex& first, const PairIndex& second,
                              int reps) {
  const PairwiseFactor f = pairwise_factor(gp, first, second, reps);
  const Eigen::Index q1 = gp.flat(first), q2 = gp.flat(second);
  const Eigen::VectorXd c1 = f.scale1 * gp.v().col(q1);
  const Eigen::VectorXd c2 = f.scale2 * gp.v().col(q2);
  Rank2Prediction out;
  out.g.resize(c1.size(), 2);
  out.g.col(0) = c1 / f.d11;
  out.g.col(1) = -c1 * (f.l21 / (f.d11 * f.d22)) + c2 / f.d22;
  out.v_next = gp.v();
  out.v_next.noalias() -= out.g * out.g.transpose();
  return out;
}

}  // namespace srsi
