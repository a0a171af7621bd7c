#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hmnem/diagnostics.hpp"
#include "hmnem/graph.hpp"
#include "hmnem/rng.hpp"

using namespace hmnem;

namespace {

std::vector<double> gaussian_series(int len, std::uint64_t seed, double mean = 0.0,
                                    double sd = 1.0) {
  Rng rng(seed);
  std::vector<double> xs(len);
  for (auto& x : xs) x = rng.normal(mean, sd);
  return xs;
}

std::vector<double> ar1_series(int len, double phi, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> xs(len);
  double x = 0.0;
  for (int i = 0; i < len; ++i) {
    x = phi * x + rng.normal();
    xs[i] = x;
  }
  return xs;
}

}  // namespace

TEST_CASE("psrf is near one for identically distributed chains") {
  std::vector<std::vector<double>> chains;
  for (int c = 0; c < 4; ++c) chains.push_back(gaussian_series(10000, 100 + c));
  const auto r = psrf(chains);
  REQUIRE_FALSE(r.degenerate);
  REQUIRE(r.sqrt_r_hat >= 0.99);
  REQUIRE(r.sqrt_r_hat <= 1.05);
}

TEST_CASE("psrf explodes for separated chains") {
  const auto a = gaussian_series(1000, 1, 0.0, 0.01);
  const auto b = gaussian_series(1000, 2, 100.0, 0.01);
  const auto r = psrf({a, b});
  REQUIRE_FALSE(r.degenerate);
  REQUIRE(r.sqrt_r_hat > 100.0);
}

TEST_CASE("psrf is invariant under joint affine maps") {
  std::vector<std::vector<double>> chains;
  for (int c = 0; c < 3; ++c) chains.push_back(ar1_series(2000, 0.5, 10 + c));
  auto scaled = chains;
  for (auto& chain : scaled)
    for (auto& x : chain) x = -3.5 * x + 11.0;
  REQUIRE_THAT(psrf(scaled).sqrt_r_hat,
               Catch::Matchers::WithinAbs(psrf(chains).sqrt_r_hat, 1e-9));
}

TEST_CASE("psrf handles degenerate and invalid input") {
  const std::vector<double> flat(100, 2.0);
  const auto r = psrf({flat, flat});
  REQUIRE(r.degenerate);
  REQUIRE(r.sqrt_r_hat == 1.0);

  REQUIRE_THROWS_AS(psrf({flat}), ValidationError);
  REQUIRE_THROWS_AS(psrf({flat, std::vector<double>(50, 1.0)}), ValidationError);
  REQUIRE_THROWS_AS(psrf({{1.0}, {2.0}}), ValidationError);
}

TEST_CASE("running psrf emits the windowed series") {
  std::vector<std::vector<double>> chains;
  for (int c = 0; c < 2; ++c) chains.push_back(gaussian_series(1000, 40 + c));
  const int window = 100, stride = 50;
  const auto series = running_psrf(chains, window, stride);
  REQUIRE(static_cast<int>(series.size()) == (1000 - window) / stride + 1);
  REQUIRE(series.front().start == 0);
  REQUIRE(series.back().start + window <= 1000);
  for (const auto& p : series) {
    REQUIRE(p.sqrt_r_hat >= 0.9);
    REQUIRE(p.sqrt_r_hat <= 1.3);
  }
  REQUIRE_THROWS_AS(running_psrf(chains, 1, 10), ValidationError);
  REQUIRE_THROWS_AS(running_psrf(chains, 2000, 10), ValidationError);
  REQUIRE_THROWS_AS(running_psrf(chains, 100, 0), ValidationError);
}

TEST_CASE("ess of independent draws stays near the sample count") {
  const auto xs = gaussian_series(10000, 5);
  const auto r = ess(xs);
  REQUIRE_FALSE(r.zero_variance);
  REQUIRE(r.value >= 0.9 * 10000);
  REQUIRE(r.value <= 10000.0);
}

TEST_CASE("ess tracks the analytic value for an autoregressive chain") {
  // Integrated autocorrelation of AR(1): (1 + phi) / (1 - phi), so the
  // effective count is L (1 - phi) / (1 + phi).
  const int len = 40000;
  const auto xs = ar1_series(len, 0.9, 8);
  const double expected = len * 0.1 / 1.9;
  const auto r = ess(xs);
  REQUIRE_FALSE(r.zero_variance);
  REQUIRE_THAT(r.value, Catch::Matchers::WithinRel(expected, 0.25));
}

TEST_CASE("ess is capped and flags constant traces") {
  std::vector<double> alternating(1000);
  for (int i = 0; i < 1000; ++i) alternating[i] = i % 2 == 0 ? 1.0 : -1.0;
  const auto r = ess(alternating);
  REQUIRE(r.value <= 1000.0);

  const auto flat = ess(std::vector<double>(100, 3.0));
  REQUIRE(flat.zero_variance);
  REQUIRE(flat.value == 0.0);
  REQUIRE_THROWS_AS(ess({1.0}), ValidationError);
}

TEST_CASE("hpd interval on a point mass has zero width") {
  const auto h = hpd_interval(std::vector<double>(50, 4.2), 0.95);
  REQUIRE(h.lower == 4.2);
  REQUIRE(h.upper == 4.2);
}

TEST_CASE("hpd interval over a uniform ladder breaks ties low") {
  std::vector<double> xs;
  for (int i = 1; i <= 100; ++i) xs.push_back(static_cast<double>(i));
  const auto h = hpd_interval(xs, 0.95);
  REQUIRE(h.lower == 1.0);
  REQUIRE(h.upper == 95.0);
}

TEST_CASE("hpd interval matches Gaussian quantiles") {
  const auto xs = gaussian_series(100000, 12);
  const auto h = hpd_interval(xs, 0.95);
  REQUIRE_THAT(h.lower, Catch::Matchers::WithinAbs(-1.96, 0.05));
  REQUIRE_THAT(h.upper, Catch::Matchers::WithinAbs(1.96, 0.05));
}

TEST_CASE("hpd interval is the shortest window of the required count") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(40 + static_cast<int>(rng.below(100)));
    for (auto& x : xs) x = rng.normal();
    const double coverage = 0.5 + 0.45 * rng.uniform();
    const auto h = hpd_interval(xs, coverage);

    std::sort(xs.begin(), xs.end());
    const int width = static_cast<int>(std::ceil(coverage * xs.size()));
    int inside = 0;
    for (double x : xs)
      if (x >= h.lower && x <= h.upper) ++inside;
    REQUIRE(inside >= width);
    for (std::size_t i = 0; i + width <= xs.size(); ++i)
      REQUIRE(xs[i + width - 1] - xs[i] >= h.upper - h.lower);
  }
  REQUIRE_THROWS_AS(hpd_interval({}, 0.95), ValidationError);
  REQUIRE_THROWS_AS(hpd_interval({1.0, 2.0}, 0.0), ValidationError);
}

TEST_CASE("rejection rate counts post burn-in rejections") {
  REQUIRE(rejection_rate({1, 1, 1, 1}) == 0.0);
  REQUIRE(rejection_rate({1, 0, 1, 0}) == 0.5);
  REQUIRE(rejection_rate({0, 0, 1, 1}, 2) == 0.0);
  REQUIRE(rejection_rate({1, 1, 0, 0}, 2) == 1.0);
  REQUIRE_THROWS_AS(rejection_rate({1, 0}, 2), ValidationError);
}

TEST_CASE("network metrics on exact recovery") {
  Network g(3);
  g.set_edge(0, 1, true);
  g.set_edge(1, 2, true);
  const std::vector<Network> path{g, g};
  const auto m = network_metrics(path, path);
  REQUIRE(m.sensitivity == 1.0);
  REQUIRE(m.specificity == 1.0);
  REQUIRE(m.accuracy == 1.0);
  REQUIRE(m.tp == 4);
  REQUIRE(m.tn == 8);
  REQUIRE_FALSE(m.no_positives);
}

TEST_CASE("network metrics on an empty guess") {
  Network truth(3);
  truth.set_edge(0, 1, true);
  const auto m = network_metrics({Network(3)}, {truth});
  REQUIRE(m.sensitivity == 0.0);
  REQUIRE(m.specificity == 1.0);
  REQUIRE(m.tp == 0);
  REQUIRE(m.fn == 1);
  REQUIRE(m.tn == 5);
}

TEST_CASE("network metrics flags undefined denominators") {
  const auto none = network_metrics({Network(2)}, {Network(2)});
  REQUIRE(none.no_positives);
  REQUIRE(none.sensitivity == 1.0);

  Network full(2);
  full.set_edge(0, 1, true);
  full.set_edge(1, 0, true);
  const auto all = network_metrics({full}, {full});
  REQUIRE(all.no_negatives);
  REQUIRE(all.specificity == 1.0);

  REQUIRE_THROWS_AS(network_metrics({Network(2)}, {Network(3)}), ValidationError);
  REQUIRE_THROWS_AS(network_metrics({}, {}), ValidationError);
  REQUIRE_THROWS_AS(network_metrics({Network(2)}, {Network(2), Network(2)}), ValidationError);
}

TEST_CASE("accuracy decomposes over the positive and negative pools") {
  Rng rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const int timepoints = 1 + static_cast<int>(rng.below(4));
    std::vector<Network> inferred, truth;
    for (int t = 0; t < timepoints; ++t) {
      Network a(4), b(4);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          if (i == j) continue;
          if (rng.uniform() < 0.4) a.set_edge(i, j, true);
          if (rng.uniform() < 0.4) b.set_edge(i, j, true);
        }
      inferred.push_back(a);
      truth.push_back(b);
    }
    const auto m = network_metrics(inferred, truth);
    const double p = static_cast<double>(m.tp + m.fn);
    const double n = static_cast<double>(m.tn + m.fp);
    if (p > 0 && n > 0)
      REQUIRE_THAT(m.accuracy, Catch::Matchers::WithinAbs(
                                   (m.sensitivity * p + m.specificity * n) / (p + n), 1e-12));
  }
}

TEST_CASE("lambda error is the absolute deviation") {
  REQUIRE_THAT(mc_error_lambda(0.11, 0.10), Catch::Matchers::WithinAbs(0.01, 1e-15));
  REQUIRE(mc_error_lambda(0.5, 0.5) == 0.0);
}

TEST_CASE("bootstrap interval brackets the mean deterministically") {
  const auto xs = gaussian_series(200, 77, 5.0, 2.0);
  const auto a = bootstrap_mean_ci(xs, 2000, 0.95, 9);
  const auto b = bootstrap_mean_ci(xs, 2000, 0.95, 9);
  REQUIRE(a.mean == b.mean);
  REQUIRE(a.lower == b.lower);
  REQUIRE(a.upper == b.upper);
  REQUIRE(a.lower <= a.mean);
  REQUIRE(a.mean <= a.upper);
  REQUIRE_THAT(a.mean, Catch::Matchers::WithinAbs(5.0, 0.5));

  const auto flat = bootstrap_mean_ci(std::vector<double>(30, 1.5), 500, 0.9, 3);
  REQUIRE(flat.lower == 1.5);
  REQUIRE(flat.upper == 1.5);
  REQUIRE_THROWS_AS(bootstrap_mean_ci({}, 100, 0.95, 1), ValidationError);
}
