#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "hmnem/errors.hpp"

namespace hmnem {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without leaving log space.
inline double log_sum_exp(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> xs) {
  require(!xs.empty(), "log_sum_exp: empty input");
  double hi = neg_inf;
  for (double x : xs)
    if (x > hi) hi = x;
  if (hi == neg_inf) return neg_inf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

// log C(n, k) through lgamma, stable for n up to a few thousand.
inline double log_binomial(int n, int k) {
  require(n >= 0 && k >= 0 && k <= n, "log_binomial: need 0 <= k <= n");
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double sigmoid(double kappa) {
  if (kappa >= 0.0) return 1.0 / (1.0 + std::exp(-kappa));
  const double e = std::exp(kappa);
  return e / (1.0 + e);
}

// log sigmoid(kappa), stable in both tails.
inline double log_sigmoid(double kappa) {
  if (kappa >= 0.0) return -std::log1p(std::exp(-kappa));
  return kappa - std::log1p(std::exp(kappa));
}

inline double logit(double p) {
  require(p > 0.0 && p < 1.0, "logit: argument must lie in (0, 1)");
  return std::log(p) - std::log1p(-p);
}

}  // namespace hmnem
