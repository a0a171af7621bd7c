#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hmnem/dataset.hpp"
#include "hmnem/graph.hpp"
#include "hmnem/likelihood.hpp"
#include "hmnem/rng.hpp"

using namespace hmnem;

namespace {

// Direct-probability evaluation of the attachment-marginalised likelihood:
// (1/n^m) sum over all n^m attachment assignments of the full data product.
// No log-sum-exp, no factorisation; the implementation's independent oracle.
double brute_marginal(const Network& g, const EffectDataset& d) {
  const int n = d.n_components();
  const int m = d.n_reporters();
  const StateMatrix s = state_matrix(g, d.col_targets());
  std::vector<int> theta(m, 0);
  double total = 0.0;
  for (;;) {
    double prob = 1.0;
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < d.n_columns(); ++k)
        prob *= std::exp(local_log_prob(static_cast<int>(d.at(i, k)), s.at(theta[i], k) ? 1 : 0,
                                        d.alpha(), d.beta()));
    total += prob;
    int pos = m - 1;
    while (pos >= 0 && theta[pos] == n - 1) theta[pos--] = 0;
    if (pos < 0) break;
    ++theta[pos];
  }
  return total / std::pow(static_cast<double>(n), m);
}

EffectDataset random_binary(int n, int m, const std::vector<int>& cols, double alpha, double beta,
                            Rng& rng) {
  std::vector<double> values(static_cast<std::size_t>(m) * cols.size());
  for (auto& v : values) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
  return {n, cols, m, DataMode::binary, alpha, beta, std::move(values)};
}

// Noise-free effect calls from a graph, the attachment map, and the column
// design: a reporter fires exactly when the perturbation silences its parent.
std::vector<double> clean_values(const Network& g, const std::vector<int>& attachments,
                                 const std::vector<int>& cols) {
  const StateMatrix s = state_matrix(g, cols);
  std::vector<double> values;
  values.reserve(attachments.size() * cols.size());
  for (int a : attachments)
    for (std::size_t k = 0; k < cols.size(); ++k)
      values.push_back(s.at(a, static_cast<int>(k)) ? 1.0 : 0.0);
  return values;
}

// The toy pathway: kinase A over transcription factors B, C, D with
// C -> D; already transitively closed except for the implied A -> D.
Network toy_truth() {
  Network g(4);
  g.set_edge(0, 1, true);
  g.set_edge(0, 2, true);
  g.set_edge(2, 3, true);
  g.set_edge(0, 3, true);
  return g;
}

const std::vector<int> toy_attachments{1, 1, 1, 1, 3, 3, 3, 3, 2, 2};

}  // namespace

TEST_CASE("local log probabilities match the error-rate table") {
  const double alpha = 0.1, beta = 0.2;
  REQUIRE_THAT(local_log_prob(1, 0, alpha, beta),
               Catch::Matchers::WithinAbs(std::log(0.1), 1e-15));
  REQUIRE_THAT(local_log_prob(0, 0, alpha, beta),
               Catch::Matchers::WithinAbs(std::log(0.9), 1e-15));
  REQUIRE_THAT(local_log_prob(1, 1, alpha, beta),
               Catch::Matchers::WithinAbs(std::log(0.8), 1e-15));
  REQUIRE_THAT(local_log_prob(0, 1, alpha, beta),
               Catch::Matchers::WithinAbs(std::log(0.2), 1e-15));

  // Each predicted state's two observation probabilities sum to one.
  const double total =
      std::exp(local_log_prob(0, 0, alpha, beta)) + std::exp(local_log_prob(1, 0, alpha, beta)) +
      std::exp(local_log_prob(0, 1, alpha, beta)) + std::exp(local_log_prob(1, 1, alpha, beta));
  REQUIRE_THAT(total, Catch::Matchers::WithinAbs(2.0, 1e-12));

  REQUIRE_THROWS_AS(local_log_prob(2, 0, alpha, beta), ValidationError);
  REQUIRE_THROWS_AS(local_log_prob(0, -1, alpha, beta), ValidationError);
  REQUIRE_THROWS_AS(local_log_prob(0, 0, 0.0, beta), ValidationError);
  REQUIRE_THROWS_AS(local_log_prob(0, 0, alpha, 1.0), ValidationError);
}

TEST_CASE("with equal rates the table is symmetric under joint complement") {
  const double a = 0.17;
  for (int d = 0; d <= 1; ++d)
    for (int s = 0; s <= 1; ++s)
      REQUIRE(local_log_prob(d, s, a, a) == local_log_prob(1 - d, 1 - s, a, a));
}

TEST_CASE("single-component marginal is the forced attachment") {
  const EffectDataset d(1, {0}, 1, DataMode::binary, 0.3, 0.1, {1.0});
  REQUIRE_THAT(marginal_log_likelihood(Network(1), d),
               Catch::Matchers::WithinAbs(std::log(0.9), 1e-12));
}

TEST_CASE("two-component marginal averages the attachment probabilities") {
  const double alpha = 0.15, beta = 0.1;
  const EffectDataset d(2, {0}, 1, DataMode::binary, alpha, beta, {1.0});
  // Empty graph: attachment to the target predicts 1 (prob 1 - beta), the
  // other component predicts 0 (prob alpha).
  REQUIRE_THAT(marginal_log_likelihood(Network(2), d),
               Catch::Matchers::WithinAbs(std::log(0.5 * ((1 - beta) + alpha)), 1e-12));
}

TEST_CASE("marginal likelihood matches brute-force attachment enumeration") {
  Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(2));  // 2 or 3
    const int m = 1 + static_cast<int>(rng.below(5));  // up to 5 reporters
    std::vector<int> cols;
    const int n_cols = 1 + static_cast<int>(rng.below(5));
    for (int k = 0; k < n_cols; ++k) cols.push_back(static_cast<int>(rng.below(n)));
    const double alpha = 0.05 + 0.4 * rng.uniform();
    const double beta = 0.05 + 0.4 * rng.uniform();
    const EffectDataset d = random_binary(n, m, cols, alpha, beta, rng);

    Network g(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && rng.uniform() < 0.4) g.set_edge(i, j, true);

    const double expected = std::log(brute_marginal(g, d));
    const double got = marginal_log_likelihood(g, d);
    REQUIRE_THAT(got, Catch::Matchers::WithinRel(expected, 1e-9));
  }
}

TEST_CASE("marginal likelihood brute-force check without subset tables") {
  // 13 distinct perturbation targets exceed the tabulation width, taking
  // the sparse accumulation path; the oracle does not care either way.
  Rng rng(29);
  const int n = 13;
  std::vector<int> cols(n);
  for (int k = 0; k < n; ++k) cols[k] = k;
  const EffectDataset d = random_binary(n, 2, cols, 0.1, 0.15, rng);
  Network g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < 0.15) g.set_edge(i, j, true);
  REQUIRE_THAT(marginal_log_likelihood(g, d),
               Catch::Matchers::WithinRel(std::log(brute_marginal(g, d)), 1e-9));
}

TEST_CASE("marginal likelihood ignores replicate column order and row labels") {
  Rng rng(31);
  const std::vector<int> cols{0, 0, 1, 1, 2};
  const EffectDataset d = random_binary(3, 4, cols, 0.1, 0.2, rng);
  Network g(3);
  g.set_edge(0, 1, true);
  const double base = marginal_log_likelihood(g, d);

  // Swap the two replicate columns of perturbation 0.
  std::vector<double> swapped = d.values();
  for (int i = 0; i < 4; ++i) std::swap(swapped[i * 5 + 0], swapped[i * 5 + 1]);
  const EffectDataset d_cols(3, cols, 4, DataMode::binary, 0.1, 0.2, swapped);
  REQUIRE_THAT(marginal_log_likelihood(g, d_cols), Catch::Matchers::WithinAbs(base, 1e-12));

  // Reverse the reporter rows.
  std::vector<double> reversed;
  for (int r = 3; r >= 0; --r)
    for (int k = 0; k < 5; ++k) reversed.push_back(d.at(r, k));
  const EffectDataset d_rows(3, cols, 4, DataMode::binary, 0.1, 0.2, reversed);
  REQUIRE_THAT(marginal_log_likelihood(g, d_rows), Catch::Matchers::WithinAbs(base, 1e-12));
}

TEST_CASE("likelihood depends on a graph only through its closure") {
  Rng rng(37);
  const std::vector<int> cols{0, 1, 2, 3};
  const EffectDataset d = random_binary(4, 6, cols, 0.1, 0.1, rng);
  for (int trial = 0; trial < 50; ++trial) {
    Network g(4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j && rng.uniform() < 0.3) g.set_edge(i, j, true);
    REQUIRE_THAT(marginal_log_likelihood(transitive_closure(g), d),
                 Catch::Matchers::WithinAbs(marginal_log_likelihood(g, d), 1e-12));
  }
}

TEST_CASE("toy pathway truth maximises the marginal likelihood") {
  const Network truth = toy_truth();
  const std::vector<int> cols{0, 1, 2, 3};
  EffectDataset data(4, cols, 10, DataMode::binary, 0.05, 0.05,
                     clean_values(truth, toy_attachments, cols));

  const double truth_ll = marginal_log_likelihood(truth, data);
  int closed_graphs = 0;
  for (std::uint64_t code = 0; code < (1ULL << 12); ++code) {
    Network g(4);
    int bit = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (i == j) continue;
        if ((code >> bit) & 1u) g.set_edge(i, j, true);
        ++bit;
      }
    if (!is_transitively_closed(g)) continue;
    ++closed_graphs;
    if (g == truth) continue;
    REQUIRE(marginal_log_likelihood(g, data) < truth_ll - 1e-9);
  }
  REQUIRE(closed_graphs > 100);  // the scan really enumerated the space
}

TEST_CASE("attached likelihood in probability mode reads the cells directly") {
  const EffectDataset d(1, {0}, 1, DataMode::probability, 0.1, 0.1, {0.8}, {0});
  REQUIRE_THAT(attached_log_likelihood(Network(1), d),
               Catch::Matchers::WithinAbs(std::log(0.8), 1e-12));
  // Unsilenced cell contributes 1 - p.
  const EffectDataset d2(2, {1}, 1, DataMode::probability, 0.1, 0.1, {0.8}, {0});
  REQUIRE_THAT(attached_log_likelihood(Network(2), d2),
               Catch::Matchers::WithinAbs(std::log(0.2), 1e-12));
}

TEST_CASE("probability mode at one half is constant over graphs") {
  std::vector<double> half(static_cast<std::size_t>(4) * 3, 0.5);
  const EffectDataset d(3, {0, 1, 2}, 4, DataMode::probability, 0.1, 0.1, half, {0, 1, 2, 0});
  const double base = attached_log_likelihood(Network(3), d);
  for (std::uint64_t code = 0; code < (1ULL << 6); ++code) {
    Network g(3);
    int bit = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        if ((code >> bit) & 1u) g.set_edge(i, j, true);
        ++bit;
      }
    REQUIRE_THAT(attached_log_likelihood(g, d), Catch::Matchers::WithinAbs(base, 1e-12));
  }
}

TEST_CASE("attached equals marginal for a single component") {
  Rng rng(41);
  EffectDataset d = random_binary(1, 3, {0, 0}, 0.2, 0.1, rng);
  d.set_attachments({0, 0, 0});
  const Network g(1);
  REQUIRE_THAT(attached_log_likelihood(g, d),
               Catch::Matchers::WithinAbs(marginal_log_likelihood(g, d), 1e-12));
}

TEST_CASE("attached likelihood matches a direct per-cell product") {
  Rng rng(43);
  const std::vector<int> cols{0, 1, 1, 2};
  EffectDataset d = random_binary(3, 5, cols, 0.12, 0.2, rng);
  d.set_attachments({0, 1, 2, 2, 1});
  Network g(3);
  g.set_edge(0, 1, true);
  g.set_edge(1, 2, true);

  const StateMatrix s = state_matrix(g, cols);
  double expected = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 4; ++k)
      expected += local_log_prob(static_cast<int>(d.at(i, k)),
                                 s.at(d.attachments()[i], k) ? 1 : 0, d.alpha(), d.beta());
  REQUIRE_THAT(attached_log_likelihood(g, d), Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("emission model validates its inputs") {
  Rng rng(47);
  const EffectDataset d = random_binary(3, 2, {0, 1}, 0.1, 0.1, rng);
  const EmissionModel model(d);
  REQUIRE_THROWS_AS(model.log_prob(Network(4)), ValidationError);
  REQUIRE_THROWS_AS(model.log_prob_attached(Network(3)), ValidationError);

  const EffectDataset prob(2, {0}, 1, DataMode::probability, 0.1, 0.1, {0.5}, {0});
  REQUIRE_THROWS_AS(EmissionModel(prob).log_prob_marginal(Network(2)), ValidationError);

  // Zero rates are storable but not evaluable in binary mode.
  const EffectDataset noiseless(2, {0}, 1, DataMode::binary, 0.0, 0.0, {1.0});
  REQUIRE_THROWS_AS(EmissionModel(noiseless), ValidationError);
}

TEST_CASE("greedy search leaves optimal data at the empty graph") {
  // Effects only where the reporter's parent is itself the target.
  const std::vector<int> cols{0, 1, 2};
  const std::vector<int> att{0, 0, 1, 1, 2, 2};
  const Network empty(3);
  const EffectDataset d(3, cols, 6, DataMode::binary, 0.05, 0.05,
                        clean_values(empty, att, cols));
  REQUIRE(greedy_static_nem(d, empty) == empty);
}

TEST_CASE("greedy search reaches the exhaustive optimum on the toy pathway") {
  const Network truth = toy_truth();
  const std::vector<int> cols{0, 1, 2, 3};
  const EffectDataset data(4, cols, 10, DataMode::binary, 0.05, 0.05,
                           clean_values(truth, toy_attachments, cols));
  const Network found = greedy_static_nem(data, Network(4));
  const Network found_again = greedy_static_nem(data, Network(4));
  REQUIRE(found == found_again);
  REQUIRE_THAT(marginal_log_likelihood(found, data),
               Catch::Matchers::WithinAbs(marginal_log_likelihood(truth, data), 1e-9));
}

TEST_CASE("greedy search never loses likelihood") {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const EffectDataset d = random_binary(3, 4, {0, 1, 2, 0}, 0.15, 0.15, rng);
    Network start(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j && rng.uniform() < 0.5) start.set_edge(i, j, true);
    const double before = marginal_log_likelihood(start, d);
    const Network end = greedy_static_nem(d, start);
    REQUIRE(marginal_log_likelihood(end, d) >= before - 1e-12);
  }
}
