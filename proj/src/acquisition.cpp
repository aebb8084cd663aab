#include "srsi/acquisition.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "srsi/stats.hpp"

namespace srsi {

namespace {

double limit_contribution(double num, double scale) {
  if (scale > 0.0) return norm_cdf(num / scale);
  if (num < 0.0) return 0.0;
  if (num > 0.0) return 1.0;
  return 0.5;
}

}  // namespace

void diff_matrices(const GpModel& gp, int xhat, Eigen::MatrixXd& mu_diff, Eigen::MatrixXd& sigma) {
  const int xs = gp.num_solutions(), bs = gp.num_models();
  mu_diff.resize(xs, bs);
  sigma.resize(xs, bs);
  for (int x = 0; x < xs; ++x) {
    for (int b = 0; b < bs; ++b) {
      mu_diff(x, b) = gp.mu()[gp.flat(xhat, b)] - gp.mu()[gp.flat(x, b)];
      sigma(x, b) = gp.sigma_diff(xhat, x, b);
    }
  }
}

double expected_change_single(const GpModel& gp, int xhat, const RiskSetEstimate& current, int x,
                              int model, int reps, double delta, double alpha) {
  const int xs = gp.num_solutions(), bs = gp.num_models();
  const Eigen::MatrixXd& v = gp.v();
  const Eigen::VectorXd& mu = gp.mu();
  const int q = gp.flat(x, model);
  const double vhat = gp.plugin(PairIndex{x, model});
  const double denom = vhat / reps + std::max(0.0, v(q, q));
  if (!(denom > 0.0)) return 0.0;  // exhausted pair: sampling cannot move anything
  const double sq = std::sqrt(denom);

  double total = 0.0;
  for (int xp = 0; xp < xs; ++xp) {
    if (xp == xhat) continue;
    double acc = 0.0, cw = 0.0;
    for (int b = 0; b < bs; ++b) {
      const int qh = gp.flat(xhat, b), qx = gp.flat(xp, b);
      const double diffv = v(qh, q) - v(qx, q);
      const double sig_t2 = v(qh, qh) - 2.0 * v(qh, qx) + v(qx, qx);
      const double s2 = std::max(0.0, sig_t2 - diffv * diffv / denom);
      const double arg = mu[qh] - mu[qx] - delta;
      if (s2 > 0.0) {
        const double sn = std::sqrt(s2);
        acc += norm_cdf(arg / sn);
        cw += norm_pdf(arg / sn) / (bs * sn) * (diffv / sq);
      } else {
        acc += arg > 0.0 ? 1.0 : 0.0;
      }
    }
    const double a = acc / bs;
    const double num = current.included[static_cast<std::size_t>(xp)] ? alpha - a : a - alpha;
    total += limit_contribution(num, std::abs(cw));
  }
  return total;
}

double expected_change_pairwise(const GpModel& gp, int xhat, const RiskSetEstimate& current, int x,
                                int model, int reps, double delta, double alpha) {
  const int xs = gp.num_solutions(), bs = gp.num_models();
  const Eigen::MatrixXd& v = gp.v();
  const Eigen::VectorXd& mu = gp.mu();
  const PairIndex first{xhat, model}, second{x, model};
  if (!(gp.plugin(first) > 0.0) || !(gp.plugin(second) > 0.0)) return 0.0;
  const PairwiseFactor f = pairwise_factor(gp, first, second, reps);
  const int q1 = gp.flat(first), q2 = gp.flat(second);

  double total = 0.0;
  for (int xp = 0; xp < xs; ++xp) {
    if (xp == xhat) continue;
    double acc = 0.0, t1 = 0.0, t2 = 0.0;
    for (int b = 0; b < bs; ++b) {
      const int qh = gp.flat(xhat, b), qx = gp.flat(xp, b);
      const double d1 = f.scale1 * (v(qh, q1) - v(qx, q1));
      const double d2 = f.scale2 * (v(qh, q2) - v(qx, q2));
      double s1 = 0.0, s2c = 0.0;
      f.solve(d1, d2, s1, s2c);
      const double red = s1 * s1 + s2c * s2c;
      const double sig_t2 = v(qh, qh) - 2.0 * v(qh, qx) + v(qx, qx);
      const double s2 = std::max(0.0, sig_t2 - red);
      const double arg = mu[qh] - mu[qx] - delta;
      if (s2 > 0.0) {
        const double sn = std::sqrt(s2);
        const double cb = norm_pdf(arg / sn) / (bs * sn);
        acc += norm_cdf(arg / sn);
        t1 += cb * s1;
        t2 += cb * s2c;
      } else {
        acc += arg > 0.0 ? 1.0 : 0.0;
      }
    }
    const double a = acc / bs;
    const double num = current.included[static_cast<std::size_t>(xp)] ? alpha - a : a - alpha;
    total += limit_contribution(num, std::sqrt(t1 * t1 + t2 * t2));
  }
  return total;
}

int select_model_for_xhat(const GpModel& gp, int xhat) {
  const int bs = gp.num_models();
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < bs; ++b) {
    const double vb = gp.v()(gp.flat(xhat, b), gp.flat(xhat, b));
    if (vb > best_v) {
      best_v = vb;
      best = b;
    }
  }
  return best;
}

double score_h1(const GpModel& gp, int xhat, int x, int b, int reps, double delta) {
  const int q = gp.flat(x, b), qh = gp.flat(xhat, b);
  const Eigen::MatrixXd& v = gp.v();
  const double vhat = gp.plugin(PairIndex{x, b});
  const double denom = vhat / reps + std::max(0.0, v(q, q));
  const double sig_t = gp.sigma_diff(xhat, x, b);
  if (!(denom > 0.0)) return 0.0;  // nothing to learn at an exhausted pair
  const double diffv = v(q, qh) - v(q, q);
  const double s2 = std::max(0.0, sig_t * sig_t - diffv * diffv / denom);
  const double sn = std::sqrt(s2);
  const double arg = gp.mu()[qh] - gp.mu()[q] - delta;
  const double phi_next = sn > 0.0 ? norm_cdf(arg / sn) : (arg > 0.0 ? 1.0 : 0.0);
  const double phi_curr = sig_t > 0.0 ? norm_cdf(arg / sig_t) : (arg > 0.0 ? 1.0 : 0.0);
  const double a1 = phi_next - phi_curr;
  const double a2 = sn > 0.0 ? norm_pdf(arg / sn) * std::abs(diffv) / (sn * std::sqrt(denom)) : 0.0;
  return folded_normal_mean(a1, a2) / gp.num_models();
}

double score_h2(const GpModel& gp, int xhat, int x, int b, int reps, double delta) {
  const PairIndex first{xhat, b}, second{x, b};
  if (!(gp.plugin(first) > 0.0) || !(gp.plugin(second) > 0.0)) return 0.0;
  const PairwiseFactor f = pairwise_factor(gp, first, second, reps);
  const int q1 = gp.flat(first), q2 = gp.flat(second);
  const Eigen::MatrixXd& v = gp.v();
  const double d1 = f.scale1 * (v(q1, q1) - v(q2, q1));
  const double d2 = f.scale2 * (v(q1, q2) - v(q2, q2));
  double s1 = 0.0, s2c = 0.0;
  f.solve(d1, d2, s1, s2c);
  const double red = s1 * s1 + s2c * s2c;
  const double sig_t = gp.sigma_diff(xhat, x, b);
  const double s2 = std::max(0.0, sig_t * sig_t - red);
  const double sn = std::sqrt(s2);
  const double arg = gp.mu()[q1] - gp.mu()[q2] - delta;
  const double phi_next = sn > 0.0 ? norm_cdf(arg / sn) : (arg > 0.0 ? 1.0 : 0.0);
  const double phi_curr = sig_t > 0.0 ? norm_cdf(arg / sig_t) : (arg > 0.0 ? 1.0 : 0.0);
  const double a1 = phi_next - phi_curr;
  const double a2 = sn > 0.0 ? norm_pdf(arg / sn) * std::sqrt(red) / sn : 0.0;
  return folded_normal_mean(a1, a2) / gp.num_models();
}

namespace {

// Per-solution candidate models under the variant rules; scores <= 0 for the
// alternative rules, with the convention that an exact mean gap of delta is
// maximal and a zero sd with a nonzero gap can never win.
void select_models(const GpModel& gp, int xhat, int x, int reps, double delta, SelectionRule rule,
                   SolutionScores& out) {
  const int bs = gp.num_models();
  double best1 = -std::numeric_limits<double>::infinity();
  double best2 = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < bs; ++b) {
    double s1 = 0.0, s2 = 0.0;
    switch (rule) {
      case SelectionRule::expected_change:
        s1 = score_h1(gp, xhat, x, b, reps, delta);
        s2 = score_h2(gp, xhat, x, b, reps, delta);
        break;
      case SelectionRule::mean_gap: {
        const double gap = gp.mu()[gp.flat(xhat, b)] - gp.mu()[gp.flat(x, b)];
        const double sig = gp.sigma_diff(xhat, x, b);
        if (sig > 0.0)
          s1 = -std::abs(delta - gap) / sig;
        else
          s1 = gap == delta ? 0.0 : -std::numeric_limits<double>::infinity();
        s2 = s1;
        break;
      }
      case SelectionRule::variance:
        s1 = gp.sigma_diff(xhat, x, b);
        s2 = s1;
        break;
    }
    if (s1 > best1) {
      best1 = s1;
      out.p1 = b;
    }
    if (s2 > best2) {
      best2 = s2;
      out.p2 = b;
    }
  }
  out.h1 = best1;
  out.h2 = best2;
  if (out.p1 < 0) out.p1 = 0;  // all scores -inf: fall back to the first model
  if (out.p2 < 0) out.p2 = 0;
}

}  // namespace

AcquisitionDecision decide(const GpModel& gp, int xhat, const RiskSetEstimate& current, int reps,
                           double delta, double alpha, SelectionRule rule) {
  const int xs = gp.num_solutions();
  AcquisitionDecision decision;
  decision.table.resize(static_cast<std::size_t>(xs));

  double best = -std::numeric_limits<double>::infinity();
  for (int x = 0; x < xs; ++x) {
    SolutionScores& row = decision.table[static_cast<std::size_t>(x)];
    double crit = 0.0;
    SamplingMode mode = SamplingMode::single;
    int model = 0;
    if (x == xhat) {
      row.p1 = select_model_for_xhat(gp, xhat);
      row.p2 = row.p1;
      row.e_single = expected_change_single(gp, xhat, current, xhat, row.p1, reps, delta, alpha);
      row.e_pairwise = 0.0;
      crit = row.e_single;
      model = row.p1;
    } else {
      select_models(gp, xhat, x, reps, delta, rule, row);
      row.e_single = expected_change_single(gp, xhat, current, x, row.p1, reps, delta, alpha);
      row.e_pairwise = expected_change_pairwise(gp, xhat, current, x, row.p2, reps, delta, alpha);
      if (row.e_single > 0.5 * row.e_pairwise) {
        crit = row.e_single;
        mode = SamplingMode::single;
        model = row.p1;
      } else {
        crit = 0.5 * row.e_pairwise;
        mode = SamplingMode::pairwise;
        model = row.p2;
      }
    }
    if (crit > best) {
      best = crit;
      decision.solution = x;
      decision.model = model;
      decision.mode = x == xhat ? SamplingMode::single : mode;
      decision.criterion = crit;
    }
  }
  return decision;
}

}  // namespace srsi
