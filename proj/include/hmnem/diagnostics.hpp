#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hmnem/errors.hpp"
#include "hmnem/graph.hpp"
#include "hmnem/rng.hpp"

namespace hmnem {

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased sample variance (denominator size - 1).
inline double variance_of(const std::vector<double>& xs) {
  const double mu = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return s / static_cast<double>(xs.size() - 1);
}

struct PsrfResult {
  double sqrt_r_hat = 1.0;
  bool degenerate = false;  // within-chain variance was zero
};

// Potential scale reduction factor over equal-length chains: within
// variance W, between variance B = L var(chain means), pooled estimate
// ((L-1)/L) W + B/L, reported as sqrt of the ratio to W.
inline PsrfResult psrf(const std::vector<std::vector<double>>& chains) {
  require(chains.size() >= 2, "psrf: need at least two chains");
  const std::size_t len = chains.front().size();
  require(len >= 2, "psrf: chains must hold at least two samples");
  for (const auto& c : chains) require(c.size() == len, "psrf: chains must have equal length");

  std::vector<double> means, vars;
  means.reserve(chains.size());
  vars.reserve(chains.size());
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(variance_of(c));
  }
  const double w = mean_of(vars);
  const double b = static_cast<double>(len) * variance_of(means);
  if (w <= 0.0) return {1.0, true};
  const double l = static_cast<double>(len);
  const double pooled = (l - 1.0) / l * w + b / l;
  return {std::sqrt(pooled / w), false};
}

struct RunningPsrfPoint {
  int start = 0;  // first sweep index of the window (0-based)
  double sqrt_r_hat = 1.0;
  bool degenerate = false;
};

// psrf over sliding windows, for convergence-over-time plots.
inline std::vector<RunningPsrfPoint> running_psrf(const std::vector<std::vector<double>>& chains,
                                                  int window, int stride) {
  require(chains.size() >= 2, "running_psrf: need at least two chains");
  const int len = static_cast<int>(chains.front().size());
  for (const auto& c : chains)
    require(static_cast<int>(c.size()) == len, "running_psrf: chains must have equal length");
  require(window >= 2 && window <= len, "running_psrf: window must lie in [2, chain length]");
  require(stride >= 1, "running_psrf: stride must be positive");

  std::vector<RunningPsrfPoint> points;
  std::vector<std::vector<double>> slice(chains.size());
  for (int start = 0; start + window <= len; start += stride) {
    for (std::size_t c = 0; c < chains.size(); ++c)
      slice[c].assign(chains[c].begin() + start, chains[c].begin() + start + window);
    const auto r = psrf(slice);
    points.push_back({start, r.sqrt_r_hat, r.degenerate});
  }
  return points;
}

struct EssResult {
  double value = 0.0;
  bool zero_variance = false;
};

// Effective sample size through the autocorrelation sum, truncated at the
// first lag pair with nonpositive sum.
inline EssResult ess(const std::vector<double>& xs) {
  const int len = static_cast<int>(xs.size());
  require(len >= 2, "ess: need at least two samples");
  const double mu = mean_of(xs);
  double c0 = 0.0;
  for (double x : xs) c0 += (x - mu) * (x - mu);
  c0 /= static_cast<double>(len);
  if (c0 <= 0.0) return {0.0, true};

  auto rho = [&](int k) {
    double c = 0.0;
    for (int i = 0; i + k < len; ++i) c += (xs[i] - mu) * (xs[i + k] - mu);
    return c / (static_cast<double>(len) * c0);
  };

  double acf_sum = 0.0;
  for (int k = 1; k + 1 < len; k += 2) {
    const double pair = rho(k) + rho(k + 1);
    if (pair <= 0.0) break;
    acf_sum += pair;
  }
  const double value = std::min(static_cast<double>(len),
                                static_cast<double>(len) / (1.0 + 2.0 * acf_sum));
  return {value, false};
}

struct HpdInterval {
  double lower = 0.0;
  double upper = 0.0;
  double coverage = 0.95;
};

// Shortest interval spanning ceil(coverage * size) consecutive order
// statistics; ties resolve to the lowest starting index.
inline HpdInterval hpd_interval(std::vector<double> samples, double coverage = 0.95) {
  require(!samples.empty(), "hpd_interval: no samples");
  require(coverage > 0.0 && coverage <= 1.0, "hpd_interval: coverage must lie in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const int len = static_cast<int>(samples.size());
  int width = static_cast<int>(std::ceil(coverage * len));
  width = std::clamp(width, 1, len);
  int best = 0;
  double best_span = samples[width - 1] - samples[0];
  for (int i = 1; i + width <= len; ++i) {
    const double span = samples[i + width - 1] - samples[i];
    if (span < best_span) {
      best_span = span;
      best = i;
    }
  }
  return {samples[best], samples[best + width - 1], coverage};
}

// Fraction of post burn-in sweeps whose kappa move was rejected.
inline double rejection_rate(const std::vector<std::uint8_t>& accepted, int discard = 0) {
  require(discard >= 0 && discard < static_cast<int>(accepted.size()),
          "rejection_rate: discard must leave at least one sweep");
  int rejected = 0, total = 0;
  for (std::size_t i = static_cast<std::size_t>(discard); i < accepted.size(); ++i) {
    rejected += accepted[i] ? 0 : 1;
    ++total;
  }
  return static_cast<double>(rejected) / static_cast<double>(total);
}

struct NetworkMetrics {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double sensitivity = 1.0;
  double specificity = 1.0;
  double accuracy = 1.0;
  bool no_positives = false;  // truth had no edges; sensitivity fixed at 1
  bool no_negatives = false;  // truth had no absent edges; specificity fixed at 1
};

// Edge recovery pooled over all timepoints and off-diagonal entries.
inline NetworkMetrics network_metrics(const std::vector<Network>& inferred,
                                      const std::vector<Network>& truth) {
  require(!inferred.empty() && inferred.size() == truth.size(),
          "network_metrics: path lengths differ");
  NetworkMetrics m;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    require(inferred[t].n() == truth[t].n(), "network_metrics: dimension mismatch");
    const int n = truth[t].n();
    for (int from = 0; from < n; ++from) {
      for (int to = 0; to < n; ++to) {
        if (from == to) continue;
        const bool got = inferred[t].edge(from, to);
        const bool want = truth[t].edge(from, to);
        if (want)
          got ? ++m.tp : ++m.fn;
        else
          got ? ++m.fp : ++m.tn;
      }
    }
  }
  if (m.tp + m.fn == 0)
    m.no_positives = true;
  else
    m.sensitivity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.tn + m.fp == 0)
    m.no_negatives = true;
  else
    m.specificity = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
  m.accuracy = static_cast<double>(m.tp + m.tn) /
               static_cast<double>(m.tp + m.tn + m.fp + m.fn);
  return m;
}

inline double mc_error_lambda(double posterior_mean, double true_lambda) {
  return std::abs(posterior_mean - true_lambda);
}

struct BootstrapCi {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Percentile bootstrap interval for the mean; deterministic given the seed.
inline BootstrapCi bootstrap_mean_ci(const std::vector<double>& values, int resamples = 2000,
                                     double conf = 0.95, std::uint64_t seed = 1) {
  require(!values.empty(), "bootstrap_mean_ci: no values");
  require(resamples >= 1, "bootstrap_mean_ci: resample count must be positive");
  require(conf > 0.0 && conf < 1.0, "bootstrap_mean_ci: confidence must lie in (0, 1)");
  Rng rng(seed);
  const int len = static_cast<int>(values.size());
  std::vector<double> boot(resamples);
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (int i = 0; i < len; ++i) s += values[rng.below_int(len)];
    boot[b] = s / static_cast<double>(len);
  }
  std::sort(boot.begin(), boot.end());
  const double tail = (1.0 - conf) / 2.0;
  const auto pick = [&](double q) {
    const int idx = std::clamp(static_cast<int>(std::floor(q * (resamples - 1) + 0.5)), 0,
                               resamples - 1);
    return boot[idx];
  };
  return {mean_of(values), pick(tail), pick(1.0 - tail)};
}

}  // namespace hmnem
