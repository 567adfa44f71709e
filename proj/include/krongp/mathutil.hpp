#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace krongp {

constexpr double kLog2Pi = 1.8378770664093454836;

/// log of the standard normal density.
inline double norm_lpdf(double x) { return -0.5 * (kLog2Pi + x * x); }

/// Standard normal CDF via erfc.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

/// log Phi(x), stable for large negative x.
///
/// Direct erfc is fine down to x ~ -37 (erfc stays normalised); below that
/// we switch to the asymptotic expansion of the Mills ratio.
inline double norm_lcdf(double x) {
  if (x > -20.0) {
    return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
  }
  // Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8)
  const double x2 = x * x;
  double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)
      + 105.0 / (x2 * x2 * x2 * x2);
  return norm_lpdf(x) - std::log(-x) + std::log(series);
}

/// phi(x)/Phi(x), the derivative of log Phi.
inline double norm_lcdf_grad(double x) {
  return std::exp(norm_lpdf(x) - norm_lcdf(x));
}

inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// InvGamma(shape=2, scale=1) log density at x > 0 (Stan convention,
/// density proportional to x^-3 exp(-1/x)).  Normalising constant
/// b^a / Gamma(a) = 1 here.
inline double inv_gamma_2_1_lpdf(double x) { return -3.0 * std::log(x) - 1.0 / x; }

/// CDF of InvGamma(2,1): upper incomplete gamma ratio Q(2, 1/x).
inline double inv_gamma_2_1_cdf(double x) {
  if (x <= 0.0) return 0.0;
  const double t = 1.0 / x;
  return (1.0 + t) * std::exp(-t);
}

inline double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace krongp
