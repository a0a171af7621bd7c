#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "hmnem/dataset.hpp"
#include "hmnem/graph.hpp"
#include "hmnem/numeric.hpp"

namespace hmnem {

// log P(observed | predicted) for one binary effect call under false
// positive rate alpha and false negative rate beta.
inline double local_log_prob(int observed, int predicted, double alpha, double beta) {
  require(observed == 0 || observed == 1, "local_log_prob: observed effect must be 0 or 1");
  require(predicted == 0 || predicted == 1, "local_log_prob: predicted state must be 0 or 1");
  require(alpha > 0.0 && alpha < 1.0, "local_log_prob: alpha must lie in (0, 1)");
  require(beta > 0.0 && beta < 1.0, "local_log_prob: beta must lie in (0, 1)");
  if (predicted == 0) return observed == 1 ? std::log(alpha) : std::log1p(-alpha);
  return observed == 0 ? std::log(beta) : std::log1p(-beta);
}

// Emission term of one timepoint, precomputed for repeated evaluation along
// a sampler run. Columns are folded per perturbed component: for reporter i
// and component slot u,
//   w1[i][u] = sum of column log probabilities if the perturbation silences
//              the reporter's parent, w0[i][u] likewise if it does not.
// A graph only enters through which slots are silenced for each candidate
// parent, so log P factorises as base_i + sum of (w1 - w0) over silenced
// slots. For small slot counts all subset sums are tabulated once.
class EmissionModel {
 public:
  explicit EmissionModel(EffectDataset data) : data_(std::move(data)) {
    if (data_.mode() == DataMode::binary) {
      require(data_.alpha() > 0.0 && data_.beta() > 0.0,
              "EmissionModel: binary likelihood needs alpha and beta in (0, 1)");
    }
    targets_ = data_.unique_targets();
    const int m = data_.n_reporters();
    const int lu = static_cast<int>(targets_.size());
    std::vector<int> slot_of(data_.n_components(), -1);
    for (int u = 0; u < lu; ++u) slot_of[targets_[u]] = u;

    std::vector<double> w1(static_cast<std::size_t>(m) * lu, 0.0);
    base_.assign(m, 0.0);
    delta_.assign(static_cast<std::size_t>(m) * lu, 0.0);
    const double la = std::log(data_.alpha());
    const double l1a = std::log1p(-data_.alpha());
    const double lb = std::log(data_.beta());
    const double l1b = std::log1p(-data_.beta());
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < data_.n_columns(); ++k) {
        const int u = slot_of[data_.col_targets()[k]];
        const double v = data_.at(i, k);
        double c1, c0;
        if (data_.mode() == DataMode::binary) {
          c1 = v == 1.0 ? l1b : lb;
          c0 = v == 1.0 ? la : l1a;
        } else {
          c1 = std::log(v);
          c0 = std::log1p(-v);
        }
        w1[static_cast<std::size_t>(i) * lu + u] += c1;
        base_[i] += c0;
      }
    }
    for (std::size_t i = 0; i < w1.size(); ++i) delta_[i] = w1[i];
    // w1 currently holds sums for s = 1; subtract the s = 0 part per slot.
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < data_.n_columns(); ++k) {
        const int u = slot_of[data_.col_targets()[k]];
        const double v = data_.at(i, k);
        double c0;
        if (data_.mode() == DataMode::binary)
          c0 = v == 1.0 ? la : l1a;
        else
          c0 = std::log1p(-v);
        delta_[static_cast<std::size_t>(i) * lu + u] -= c0;
      }
    }

    if (lu <= max_table_bits) {
      const std::size_t size = 1ULL << lu;
      table_.assign(static_cast<std::size_t>(m) * size, 0.0);
      for (int i = 0; i < m; ++i) {
        double* t = table_.data() + static_cast<std::size_t>(i) * size;
        const double* d = delta_.data() + static_cast<std::size_t>(i) * lu;
        for (std::size_t mask = 1; mask < size; ++mask) {
          const int low = std::countr_zero(mask);
          t[mask] = t[mask & (mask - 1)] + d[low];
        }
      }
    }
  }

  const EffectDataset& dataset() const { return data_; }

  // log P(data | g), marginalised over reporter attachments when the
  // dataset carries none, otherwise conditioned on the stored map.
  double log_prob(const Network& g) const {
    require(g.n() == data_.n_components(), "EmissionModel: graph dimension mismatch");
    const auto masks = silencing_masks(g);
    return data_.has_attachments() ? attached(masks) : marginal(masks);
  }

  double log_prob_marginal(const Network& g) const {
    require(g.n() == data_.n_components(), "EmissionModel: graph dimension mismatch");
    require(data_.mode() == DataMode::binary,
            "EmissionModel: marginal likelihood needs binary data");
    return marginal(silencing_masks(g));
  }

  double log_prob_attached(const Network& g) const {
    require(g.n() == data_.n_components(), "EmissionModel: graph dimension mismatch");
    require(data_.has_attachments(),
            "EmissionModel: attached likelihood needs an attachment map");
    return attached(silencing_masks(g));
  }

 private:
  static constexpr int max_table_bits = 12;

  // Per component j, bits over target slots whose perturbation silences j.
  std::vector<std::uint64_t> silencing_masks(const Network& g) const {
    const Network closed = transitive_closure(g);
    const int lu = static_cast<int>(targets_.size());
    std::vector<std::uint64_t> masks(data_.n_components(), 0);
    for (int u = 0; u < lu; ++u) {
      const int target = targets_[u];
      const std::uint64_t reach = closed.row(target) | (1ULL << target);
      for (int j = 0; j < data_.n_components(); ++j)
        if ((reach >> j) & 1u) masks[j] |= 1ULL << u;
    }
    return masks;
  }

  double reporter_term(int i, std::uint64_t mask) const {
    const int lu = static_cast<int>(targets_.size());
    if (!table_.empty()) return table_[(static_cast<std::size_t>(i) << lu) + mask];
    const double* d = delta_.data() + static_cast<std::size_t>(i) * lu;
    double acc = 0.0;
    std::uint64_t bits = mask;
    while (bits) {
      acc += d[std::countr_zero(bits)];
      bits &= bits - 1;
    }
    return acc;
  }

  double marginal(const std::vector<std::uint64_t>& masks) const {
    const int n = data_.n_components();
    const double log_n = std::log(static_cast<double>(n));
    double total = 0.0;
    std::vector<double> per_parent(n);
    for (int i = 0; i < data_.n_reporters(); ++i) {
      for (int j = 0; j < n; ++j) per_parent[j] = reporter_term(i, masks[j]);
      total += base_[i] + log_sum_exp(per_parent) - log_n;
    }
    return total;
  }

  double attached(const std::vector<std::uint64_t>& masks) const {
    double total = 0.0;
    for (int i = 0; i < data_.n_reporters(); ++i)
      total += base_[i] + reporter_term(i, masks[data_.attachments()[i]]);
    return total;
  }

  EffectDataset data_;
  std::vector<int> targets_;
  std::vector<double> base_;   // per reporter, all slots unsilenced
  std::vector<double> delta_;  // m x lu, silenced minus unsilenced
  std::vector<double> table_;  // m x 2^lu subset sums when lu is small
};

// Mean over the n candidate parents of the per-parent data probability,
// i.e. the attachment-marginalised likelihood. Binary mode only.
inline double marginal_log_likelihood(const Network& g, const EffectDataset& data) {
  return EmissionModel(data).log_prob_marginal(g);
}

// Likelihood under the dataset's fixed reporter-to-component map.
inline double attached_log_likelihood(const Network& g, const EffectDataset& data) {
  return EmissionModel(data).log_prob_attached(g);
}

// Greedy single-edge hill climb on the static marginal likelihood. Among
// equally improving flips the lowest (from, to) pair wins; stops at the
// first graph with no strictly improving neighbour.
inline Network greedy_static_nem(const EffectDataset& data, Network start) {
  const EmissionModel model(data);
  Network g = std::move(start);
  require(g.n() == data.n_components(), "greedy_static_nem: start graph dimension mismatch");
  double current = model.log_prob_marginal(g);
  for (;;) {
    double best = current;
    int best_from = -1, best_to = -1;
    for (int from = 0; from < g.n(); ++from) {
      for (int to = 0; to < g.n(); ++to) {
        if (from == to) continue;
        g.toggle_edge(from, to);
        const double cand = model.log_prob_marginal(g);
        g.toggle_edge(from, to);
        if (cand > best) {
          best = cand;
          best_from = from;
          best_to = to;
        }
      }
    }
    if (best_from < 0) return g;
    g.toggle_edge(best_from, best_to);
    current = best;
  }
}

}  // namespace hmnem
