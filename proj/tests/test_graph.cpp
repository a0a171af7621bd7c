#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "hmnem/graph.hpp"
#include "hmnem/rng.hpp"

using namespace hmnem;

namespace {

// Reference closure by per-node breadth-first search, independent of the
// bit-parallel Warshall implementation under test.
Network bfs_closure(const Network& g) {
  const int n = g.n();
  Network out(n);
  for (int start = 0; start < n; ++start) {
    std::vector<bool> seen(n, false);
    std::vector<int> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
      const int v = queue.back();
      queue.pop_back();
      for (int w = 0; w < n; ++w) {
        if (w == v || !g.edge(v, w) || seen[w]) continue;
        seen[w] = true;
        queue.push_back(w);
      }
    }
    for (int w = 0; w < n; ++w)
      if (w != start && seen[w]) out.set_edge(start, w, true);
  }
  return out;
}

Network random_graph(int n, double density, Rng& rng) {
  Network g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < density) g.set_edge(i, j, true);
  return g;
}

}  // namespace

TEST_CASE("network stores off-diagonal edges") {
  Network g(3);
  REQUIRE(g.n() == 3);
  REQUIRE(g.edge_slots() == 6);
  REQUIRE(g.edge_count() == 0);

  g.set_edge(0, 2, true);
  REQUIRE(g.edge(0, 2));
  REQUIRE_FALSE(g.edge(2, 0));
  REQUIRE(g.edge_count() == 1);

  g.set_edge(0, 2, false);
  REQUIRE(g.edge_count() == 0);

  REQUIRE_THROWS_AS(g.set_edge(1, 1, true), ValidationError);
  REQUIRE_THROWS_AS(g.toggle_edge(2, 2), ValidationError);
  REQUIRE_THROWS_AS(Network(0), ValidationError);
  REQUIRE_THROWS_AS(Network(65), ValidationError);
  REQUIRE_THROWS_AS(g.edge(3, 0), ValidationError);
}

TEST_CASE("from_rows validates shape and diagonal") {
  const auto g = Network::from_rows(3, {0b010, 0b000, 0b011});
  REQUIRE(g.edge(0, 1));
  REQUIRE(g.edge(2, 0));
  REQUIRE(g.edge(2, 1));
  REQUIRE(g.edge_count() == 3);

  REQUIRE_THROWS_AS(Network::from_rows(3, {0, 0}), ValidationError);
  REQUIRE_THROWS_AS(Network::from_rows(3, {0b001, 0, 0}), ValidationError);  // diagonal bit
  REQUIRE_THROWS_AS(Network::from_rows(3, {0b1000, 0, 0}), ValidationError);  // bit past n
}

TEST_CASE("flip_edge toggles exactly one slot") {
  Network g(4);
  const Network h = flip_edge(g, 1, 3);
  REQUIRE(h.edge(1, 3));
  REQUIRE(graph_distance(g, h) == 1);
  REQUIRE(flip_edge(h, 1, 3) == g);

  // Flips of each distinct slot give n(n-1) distinct distance-1 graphs.
  std::set<std::vector<std::uint64_t>> seen;
  for (int from = 0; from < 4; ++from)
    for (int to = 0; to < 4; ++to) {
      if (from == to) continue;
      const Network f = flip_edge(g, from, to);
      std::vector<std::uint64_t> rows;
      for (int i = 0; i < 4; ++i) rows.push_back(f.row(i));
      seen.insert(rows);
    }
  REQUIRE(seen.size() == 12);
}

TEST_CASE("graph_distance is the symmetric difference size") {
  const auto u = Network::from_rows(3, {0b010, 0b100, 0b000});
  const auto v = Network::from_rows(3, {0b110, 0b000, 0b000});
  // u = {0->1, 1->2}, v = {0->1, 0->2}: symmetric difference {1->2, 0->2}.
  REQUIRE(graph_distance(u, u) == 0);
  REQUIRE(graph_distance(u, v) == 2);
  REQUIRE(graph_distance(v, u) == 2);
  REQUIRE_THROWS_AS(graph_distance(u, Network(4)), ValidationError);
}

TEST_CASE("graph_distance is a metric") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    const Network a = random_graph(n, 0.4, rng);
    const Network b = random_graph(n, 0.4, rng);
    const Network c = random_graph(n, 0.4, rng);
    REQUIRE(graph_distance(a, b) == graph_distance(b, a));
    REQUIRE((graph_distance(a, b) == 0) == (a == b));
    REQUIRE(graph_distance(a, c) <= graph_distance(a, b) + graph_distance(b, c));
  }
}

TEST_CASE("closure adds the implied edge of a two-step chain") {
  // 0 -> 1, 0 -> 2, 2 -> 3; the only missing implication is 0 -> 3.
  auto g = Network(4);
  g.set_edge(0, 1, true);
  g.set_edge(0, 2, true);
  g.set_edge(2, 3, true);
  REQUIRE_FALSE(is_transitively_closed(g));

  const Network closed = transitive_closure(g);
  REQUIRE(closed.edge(0, 1));
  REQUIRE(closed.edge(0, 2));
  REQUIRE(closed.edge(2, 3));
  REQUIRE(closed.edge(0, 3));
  REQUIRE(closed.edge_count() == 4);
  REQUIRE(is_transitively_closed(closed));
}

TEST_CASE("closure of a two-cycle adds nothing") {
  auto g = Network(2);
  g.set_edge(0, 1, true);
  g.set_edge(1, 0, true);
  REQUIRE(is_transitively_closed(g));
  REQUIRE(transitive_closure(g) == g);
}

TEST_CASE("chain without shortcut is not closed") {
  auto g = Network(3);
  g.set_edge(0, 1, true);
  g.set_edge(1, 2, true);
  REQUIRE_FALSE(is_transitively_closed(g));
  const Network closed = transitive_closure(g);
  REQUIRE(closed.edge(0, 2));
  REQUIRE(closed.edge_count() == 3);
}

TEST_CASE("closure matches breadth-first search oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const Network g = random_graph(n, rng.uniform(), rng);
    const Network closed = transitive_closure(g);
    REQUIRE(closed == bfs_closure(g));
    REQUIRE(is_transitively_closed(g) == (closed == g));
  }
}

TEST_CASE("closure is idempotent and monotone") {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const Network g = random_graph(n, 0.3, rng);
    const Network closed = transitive_closure(g);
    REQUIRE(transitive_closure(closed) == closed);
    for (int i = 0; i < n; ++i) REQUIRE((g.row(i) & ~closed.row(i)) == 0);
  }
}

TEST_CASE("state matrix of the toy pathway") {
  // Components A=0, B=1, C=2, D=3 with edges A->B, A->C, C->D. Perturbing
  // A silences everything downstream, so every component reads 1.
  auto g = Network(4);
  g.set_edge(0, 1, true);
  g.set_edge(0, 2, true);
  g.set_edge(2, 3, true);

  const StateMatrix s = state_matrix(g, {0, 1, 2, 3});
  for (int j = 0; j < 4; ++j) REQUIRE(s.at(j, 0));
  // Perturbing B reaches only B.
  REQUIRE_FALSE(s.at(0, 1));
  REQUIRE(s.at(1, 1));
  REQUIRE_FALSE(s.at(2, 1));
  REQUIRE_FALSE(s.at(3, 1));
  // Perturbing C reaches C and D.
  REQUIRE_FALSE(s.at(0, 2));
  REQUIRE_FALSE(s.at(1, 2));
  REQUIRE(s.at(2, 2));
  REQUIRE(s.at(3, 2));
  // Perturbing D reaches only D.
  REQUIRE_FALSE(s.at(0, 3));
  REQUIRE_FALSE(s.at(1, 3));
  REQUIRE_FALSE(s.at(2, 3));
  REQUIRE(s.at(3, 3));
}

TEST_CASE("state matrix of the empty graph marks only the target") {
  const StateMatrix s = state_matrix(Network(3), {2, 0, 2});
  for (int j = 0; j < 3; ++j) {
    REQUIRE(s.at(j, 0) == (j == 2));
    REQUIRE(s.at(j, 1) == (j == 0));
    REQUIRE(s.at(j, 2) == (j == 2));
  }
  REQUIRE(s.n_components() == 3);
  REQUIRE(s.n_perturbations() == 3);
}

TEST_CASE("state matrix sees a graph only through its closure") {
  Rng rng(17);
  std::vector<int> targets{0, 1, 2, 3, 2};
  for (int trial = 0; trial < 200; ++trial) {
    const Network g = random_graph(4, 0.35, rng);
    const Network closed = transitive_closure(g);
    const StateMatrix a = state_matrix(g, targets);
    const StateMatrix b = state_matrix(closed, targets);
    for (int j = 0; j < 4; ++j) REQUIRE(a.component_mask(j) == b.component_mask(j));
  }
}

TEST_CASE("state matrix rejects bad targets") {
  REQUIRE_THROWS_AS(state_matrix(Network(3), {}), ValidationError);
  REQUIRE_THROWS_AS(state_matrix(Network(3), {3}), ValidationError);
  REQUIRE_THROWS_AS(state_matrix(Network(3), {-1}), ValidationError);
}
