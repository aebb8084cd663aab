#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace srsi {

inline constexpr double kPi = 3.14159265358979323846;

// Standard normal cdf.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Standard normal density.
inline double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

// Mean of |N(a1, a2^2)|; a2 = 0 degenerates to |a1|.
inline double folded_normal_mean(double a1, double a2) {
  if (a2 < 0.0) throw std::invalid_argument("folded_normal_mean: a2 must be nonnegative");
  if (a2 == 0.0) return std::abs(a1);
  const double r = a1 / a2;
  return (1.0 - 2.0 * norm_cdf(-r)) * a1 + 2.0 * a2 * norm_pdf(-r);
}

// Streaming mean/variance accumulator with batch merge (Chan et al. form).
struct RunningStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations from the mean

  void add(double y) {
    ++count;
    const double d = y - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (y - mean);
  }

  void merge(const RunningStats& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count), nb = static_cast<double>(o.count);
    const double d = o.mean - mean;
    const double n = na + nb;
    mean += d * nb / n;
    m2 += o.m2 + d * d * na * nb / n;
    count += o.count;
  }

  // Unbiased sample variance; 0 until two points exist.
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
};

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term, ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

// Upper tail p-value of a chi-square statistic with df degrees of freedom.
inline double chi_square_pvalue(double stat, double df) {
  if (stat <= 0.0) return 1.0;
  return 1.0 - gamma_p(df / 2.0, stat / 2.0);
}

}  // namespace srsi
