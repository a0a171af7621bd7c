#pragma once

#include <bit>
#include <cstdint>
#include <utility>
#include <vector>

#include "hmnem/errors.hpp"

namespace hmnem {

// Directed graph over n pathway components, n <= 64. One adjacency bitmask
// per source node; bit `to` of row(from) is the edge from -> to. Self loops
// are never stored: reachability treats every node as trivially reaching
// itself, so the diagonal carries no information and is kept clear.
class Network {
 public:
  explicit Network(int n) : n_(n), rows_(check_n(n), 0) {}

  static Network from_rows(int n, std::vector<std::uint64_t> rows) {
    Network g(n);
    require(rows.size() == static_cast<std::size_t>(n), "Network: row count mismatch");
    for (int i = 0; i < n; ++i)
      require((rows[i] & ~g.off_diag_mask(i)) == 0, "Network: row has bits outside valid range");
    g.rows_ = std::move(rows);
    return g;
  }

  int n() const { return n_; }
  int edge_slots() const { return n_ * (n_ - 1); }

  std::uint64_t row(int from) const {
    check_node(from);
    return rows_[from];
  }

  bool edge(int from, int to) const {
    check_node(from);
    check_node(to);
    return (rows_[from] >> to) & 1u;
  }

  void set_edge(int from, int to, bool present) {
    check_off_diag(from, to);
    const std::uint64_t bit = 1ULL << to;
    if (present)
      rows_[from] |= bit;
    else
      rows_[from] &= ~bit;
  }

  void toggle_edge(int from, int to) {
    check_off_diag(from, to);
    rows_[from] ^= 1ULL << to;
  }

  int edge_count() const {
    int total = 0;
    for (auto r : rows_) total += std::popcount(r);
    return total;
  }

  // Bitmask valid for row `from`: all node bits except the diagonal.
  std::uint64_t off_diag_mask(int from) const {
    const std::uint64_t all = n_ == 64 ? ~0ULL : (1ULL << n_) - 1;
    return all & ~(1ULL << from);
  }

  bool operator==(const Network& other) const = default;

 private:
  static std::size_t check_n(int n) {
    require(n >= 1 && n <= 64, "Network: component count must lie in [1, 64]");
    return static_cast<std::size_t>(n);
  }
  void check_node(int v) const { require(v >= 0 && v < n_, "Network: node index out of range"); }
  void check_off_diag(int from, int to) const {
    check_node(from);
    check_node(to);
    require(from != to, "Network: self edges are not representable");
  }

  int n_;
  std::vector<std::uint64_t> rows_;
};

// Copy of g with the edge (from, to) toggled.
inline Network flip_edge(Network g, int from, int to) {
  g.toggle_edge(from, to);
  return g;
}

// Number of differing off-diagonal adjacency entries.
inline int graph_distance(const Network& u, const Network& v) {
  require(u.n() == v.n(), "graph_distance: dimension mismatch");
  int d = 0;
  for (int i = 0; i < u.n(); ++i) d += std::popcount(u.row(i) ^ v.row(i));
  return d;
}

// Warshall closure with bit-parallel row merges. The diagonal stays clear
// even through cycles; self reachability is implicit.
inline Network transitive_closure(const Network& g) {
  const int n = g.n();
  std::vector<std::uint64_t> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = g.row(i);
  for (int k = 0; k < n; ++k) {
    const std::uint64_t bit = 1ULL << k;
    for (int i = 0; i < n; ++i)
      if (rows[i] & bit) rows[i] |= rows[k];
  }
  for (int i = 0; i < n; ++i) rows[i] &= g.off_diag_mask(i);
  return Network::from_rows(n, std::move(rows));
}

inline bool is_transitively_closed(const Network& g) {
  const int n = g.n();
  for (int i = 0; i < n; ++i) {
    std::uint64_t succ = g.row(i);
    while (succ) {
      const int k = std::countr_zero(succ);
      succ &= succ - 1;
      // Every edge k -> j must already be present as i -> j (j == i exempt).
      if (g.row(k) & ~g.row(i) & g.off_diag_mask(i)) return false;
    }
  }
  return true;
}

// Silencing scheme of a closed graph: entry (component, perturbation) is 1
// iff perturbing target(k) silences the component, which holds when the
// component equals the target or is reachable from it.
class StateMatrix {
 public:
  StateMatrix(int n_components, int n_perturbations)
      : n_(n_components), l_(n_perturbations), by_component_(n_components, 0) {
    require(n_ >= 1 && n_ <= 64, "StateMatrix: component count must lie in [1, 64]");
    require(l_ >= 1 && l_ <= 64, "StateMatrix: perturbation count must lie in [1, 64]");
  }

  int n_components() const { return n_; }
  int n_perturbations() const { return l_; }

  bool at(int component, int perturbation) const {
    require(component >= 0 && component < n_, "StateMatrix: component out of range");
    require(perturbation >= 0 && perturbation < l_, "StateMatrix: perturbation out of range");
    return (by_component_[component] >> perturbation) & 1u;
  }

  // Bits over perturbations that silence the component.
  std::uint64_t component_mask(int component) const {
    require(component >= 0 && component < n_, "StateMatrix: component out of range");
    return by_component_[component];
  }

  void set(int component, int perturbation, bool value) {
    require(component >= 0 && component < n_, "StateMatrix: component out of range");
    require(perturbation >= 0 && perturbation < l_, "StateMatrix: perturbation out of range");
    const std::uint64_t bit = 1ULL << perturbation;
    if (value)
      by_component_[component] |= bit;
    else
      by_component_[component] &= ~bit;
  }

 private:
  int n_, l_;
  std::vector<std::uint64_t> by_component_;
};

inline StateMatrix state_matrix(const Network& g, const std::vector<int>& pert_targets) {
  require(!pert_targets.empty(), "state_matrix: no perturbations");
  const Network closed = transitive_closure(g);
  StateMatrix s(g.n(), static_cast<int>(pert_targets.size()));
  for (int k = 0; k < static_cast<int>(pert_targets.size()); ++k) {
    const int target = pert_targets[k];
    require(target >= 0 && target < g.n(), "state_matrix: perturbation targets unknown component");
    for (int j = 0; j < g.n(); ++j)
      if (j == target || closed.edge(target, j)) s.set(j, k, true);
  }
  return s;
}

}  // namespace hmnem
