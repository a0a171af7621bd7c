#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "hmnem/errors.hpp"

namespace hmnem {

enum class DataMode { binary, probability };

// Effect observations for one timepoint: m reporters by L columns, each
// column one replicate of a single-component perturbation. Binary mode
// stores 0/1 calls plus the false positive rate alpha and false negative
// rate beta; probability mode stores per-entry effect probabilities,
// clamped away from {0, 1} on construction so logs stay finite. Zero
// rates are storable (noise-free simulation output) but rejected once the
// data reaches a likelihood evaluation.
class EffectDataset {
 public:
  static constexpr double prob_clamp = 1e-12;

  EffectDataset(int n_components, std::vector<int> col_targets, int n_reporters, DataMode mode,
                double alpha, double beta, std::vector<double> values,
                std::vector<int> attachments = {})
      : n_(n_components),
        col_targets_(std::move(col_targets)),
        m_(n_reporters),
        mode_(mode),
        alpha_(alpha),
        beta_(beta),
        values_(std::move(values)),
        attachments_(std::move(attachments)) {
    require(n_ >= 1 && n_ <= 64, "EffectDataset: component count must lie in [1, 64]");
    require(m_ >= 1, "EffectDataset: need at least one reporter");
    require(!col_targets_.empty(), "EffectDataset: need at least one column");
    for (int t : col_targets_)
      require(t >= 0 && t < n_, "EffectDataset: column perturbs unknown component");
    require(values_.size() == static_cast<std::size_t>(m_) * col_targets_.size(),
            "EffectDataset: value matrix shape mismatch");
    require(alpha_ >= 0.0 && alpha_ < 1.0, "EffectDataset: alpha must lie in [0, 1)");
    require(beta_ >= 0.0 && beta_ < 1.0, "EffectDataset: beta must lie in [0, 1)");
    if (mode_ == DataMode::binary) {
      for (double v : values_)
        require(v == 0.0 || v == 1.0, "EffectDataset: binary mode values must be 0 or 1");
    } else {
      for (double& v : values_) {
        require(v >= 0.0 && v <= 1.0, "EffectDataset: probabilities must lie in [0, 1]");
        v = std::clamp(v, prob_clamp, 1.0 - prob_clamp);
      }
    }
    if (!attachments_.empty()) {
      require(attachments_.size() == static_cast<std::size_t>(m_),
              "EffectDataset: attachment map must cover every reporter");
      for (int a : attachments_)
        require(a >= 0 && a < n_, "EffectDataset: attachment to unknown component");
    }
  }

  int n_components() const { return n_; }
  int n_reporters() const { return m_; }
  int n_columns() const { return static_cast<int>(col_targets_.size()); }
  DataMode mode() const { return mode_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const std::vector<int>& col_targets() const { return col_targets_; }
  const std::vector<double>& values() const { return values_; }

  double at(int reporter, int col) const {
    return values_[static_cast<std::size_t>(reporter) * col_targets_.size() + col];
  }

  void set(int reporter, int col, double v) {
    values_[static_cast<std::size_t>(reporter) * col_targets_.size() + col] = v;
  }

  bool has_attachments() const { return !attachments_.empty(); }
  const std::vector<int>& attachments() const { return attachments_; }

  void set_attachments(std::vector<int> attachments) {
    if (!attachments.empty()) {
      require(attachments.size() == static_cast<std::size_t>(m_),
              "EffectDataset: attachment map must cover every reporter");
      for (int a : attachments)
        require(a >= 0 && a < n_, "EffectDataset: attachment to unknown component");
    }
    attachments_ = std::move(attachments);
  }

  // Distinct perturbed components, ascending. Columns targeting the same
  // component are replicates and share one slot in the emission tables.
  std::vector<int> unique_targets() const {
    std::vector<int> u = col_targets_;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
  }

 private:
  int n_;
  std::vector<int> col_targets_;
  int m_;
  DataMode mode_;
  double alpha_, beta_;
  std::vector<double> values_;
  std::vector<int> attachments_;
};

}  // namespace hmnem
