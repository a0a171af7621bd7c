#pragma once

#include <cmath>
#include <vector>

#include "hmnem/graph.hpp"
#include "hmnem/numeric.hpp"

namespace hmnem {

// log of the smoothness normaliser
//   Z(lambda) = sum_{e=0}^{n_e} C(n_e, e) lambda (1 - lambda)^(e - 1)
// over all possible successor distances for a graph on n components,
// n_e = n (n - 1). Accumulated in log space so that extreme lambda and
// large n stay finite.
inline double log_transition_normalizer(double lambda, int n) {
  require(lambda > 0.0 && lambda < 1.0, "log_transition_normalizer: lambda must lie in (0, 1)");
  require(n >= 1 && n <= 64, "log_transition_normalizer: component count must lie in [1, 64]");
  const int n_e = n * (n - 1);
  const double log_l = std::log(lambda);
  const double log_q = std::log1p(-lambda);
  std::vector<double> terms(n_e + 1);
  for (int e = 0; e <= n_e; ++e) terms[e] = log_binomial(n_e, e) + log_l + (e - 1) * log_q;
  return log_sum_exp(terms);
}

// Geometric-in-distance transition density between adjacent timepoints.
// Caches everything that depends on (n, lambda) so sampler sweeps only pay
// for a subtraction per evaluation.
class TransitionKernel {
 public:
  TransitionKernel(int n, double lambda)
      : n_(n),
        lambda_(lambda),
        log_lambda_(std::log(lambda)),
        log_one_minus_lambda_(std::log1p(-lambda)),
        log_z_(log_transition_normalizer(lambda, n)) {}

  int n() const { return n_; }
  double lambda() const { return lambda_; }
  double log_lambda() const { return log_lambda_; }
  double log_one_minus_lambda() const { return log_one_minus_lambda_; }
  double log_z() const { return log_z_; }

  double log_prob_distance(int distance) const {
    require(distance >= 0 && distance <= n_ * (n_ - 1),
            "TransitionKernel: distance out of range");
    return log_lambda_ + (distance - 1) * log_one_minus_lambda_ - log_z_;
  }

 private:
  int n_;
  double lambda_;
  double log_lambda_, log_one_minus_lambda_, log_z_;
};

inline double log_transition_prob(const Network& from, const Network& to, double lambda) {
  require(from.n() == to.n(), "log_transition_prob: dimension mismatch");
  const TransitionKernel kernel(from.n(), lambda);
  return kernel.log_prob_distance(graph_distance(from, to));
}

}  // namespace hmnem
