#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "hmnem/dataset.hpp"
#include "hmnem/diagnostics.hpp"
#include "hmnem/graph.hpp"
#include "hmnem/rng.hpp"
#include "hmnem/sampler.hpp"
#include "hmnem/transition.hpp"

namespace hmnem {

struct SimConfig {
  int n = 6;
  int timepoints = 8;
  int n_reporters = 4;   // reporters attached to each component
  int n_replicates = 3;  // replicate columns per perturbation
  double alpha = 0.1;
  double beta = 0.1;
  double lambda = 0.5;
  std::uint64_t seed = 1;
  double initial_flip_fraction = 0.10;

  void validate() const {
    require(n >= 2 && n <= 64, "simulate: component count must lie in [2, 64]");
    require(timepoints >= 1, "simulate: need at least one timepoint");
    require(n_reporters >= 1, "simulate: need at least one reporter per component");
    require(n_replicates >= 1, "simulate: need at least one replicate");
    require(alpha >= 0.0 && alpha < 1.0, "simulate: alpha must lie in [0, 1)");
    require(beta >= 0.0 && beta < 1.0, "simulate: beta must lie in [0, 1)");
    require(lambda > 0.0 && lambda < 1.0, "simulate: lambda must lie in (0, 1)");
    require(initial_flip_fraction > 0.0 && initial_flip_fraction <= 1.0,
            "simulate: initial flip fraction must lie in (0, 1]");
  }
};

struct GroundTruth {
  SimConfig config;
  std::vector<Network> path;
  std::vector<int> attachments;  // reporter -> component
  std::vector<int> col_targets;  // column -> perturbed component
  std::vector<EffectDataset> clean;
  std::vector<EffectDataset> noisy;
};

// Number of entries to flip for one evolution step, distributed as the
// normalised distance weights C(n_e, e) lambda (1 - lambda)^(e - 1). That
// is a binomial with success probability (1 - lambda) / (2 - lambda).
inline int sample_flip_count(int n_e, double lambda, Rng& rng) {
  require(n_e >= 1, "sample_flip_count: need at least one edge slot");
  require(lambda > 0.0 && lambda < 1.0, "sample_flip_count: lambda must lie in (0, 1)");
  const double p = (1.0 - lambda) / (2.0 - lambda);
  int count = 0;
  for (int i = 0; i < n_e; ++i)
    if (rng.uniform() < p) ++count;
  return count;
}

namespace detail {

inline std::pair<int, int> slot_to_edge(int slot, int n) {
  const int from = slot / (n - 1);
  int to = slot % (n - 1);
  if (to >= from) ++to;
  return {from, to};
}

// k distinct edge slots by partial Fisher-Yates over the slot indices.
inline std::vector<int> pick_distinct_slots(int n_e, int k, Rng& rng) {
  std::vector<int> slots(n_e);
  for (int i = 0; i < n_e; ++i) slots[i] = i;
  for (int i = 0; i < k; ++i) {
    const int j = i + rng.below_int(n_e - i);
    std::swap(slots[i], slots[j]);
  }
  slots.resize(k);
  return slots;
}

inline Network with_flipped_slots(const Network& g, const std::vector<int>& slots) {
  Network out = g;
  for (int slot : slots) {
    const auto [from, to] = slot_to_edge(slot, g.n());
    out.toggle_edge(from, to);
  }
  return out;
}

constexpr int max_closure_attempts = 1000000;

}  // namespace detail

// First network of a truth path: flip a fixed 10% (at least one) of the
// empty graph's off-diagonal entries, re-drawing the positions until the
// result is transitively closed.
inline Network generate_initial_network(int n, double flip_fraction, Rng& rng) {
  require(n >= 2 && n <= 64, "generate_initial_network: component count must lie in [2, 64]");
  require(flip_fraction > 0.0 && flip_fraction <= 1.0,
          "generate_initial_network: flip fraction must lie in (0, 1]");
  const int n_e = n * (n - 1);
  int flips = static_cast<int>(std::llround(flip_fraction * n_e));
  if (flips < 1) flips = 1;
  if (flips > n_e) flips = n_e;
  for (int attempt = 0; attempt < detail::max_closure_attempts; ++attempt) {
    const Network g =
        detail::with_flipped_slots(Network(n), detail::pick_distinct_slots(n_e, flips, rng));
    if (is_transitively_closed(g)) return g;
  }
  throw ValidationError("generate_initial_network: no closed graph found within attempt budget");
}

// One evolution step: draw the flip count from the distance marginal, then
// re-draw which entries flip until the successor is transitively closed.
// The count is kept fixed across attempts so realised distances follow the
// sampled marginal rather than a closure-survival reweighting of it.
inline Network evolve_network(const Network& prev, double lambda, Rng& rng) {
  const int n_e = prev.edge_slots();
  const int flips = sample_flip_count(n_e, lambda, rng);
  if (flips == 0) return prev;
  for (int attempt = 0; attempt < detail::max_closure_attempts; ++attempt) {
    const Network g =
        detail::with_flipped_slots(prev, detail::pick_distinct_slots(n_e, flips, rng));
    if (is_transitively_closed(g)) return g;
  }
  throw ValidationError("evolve_network: no closed successor at the sampled distance");
}

// Square design: n_reporters reporters per component, n_replicates columns
// per single-component perturbation, components in ascending order.
inline std::vector<int> square_attachments(int n, int n_reporters) {
  std::vector<int> att(static_cast<std::size_t>(n) * n_reporters);
  for (std::size_t i = 0; i < att.size(); ++i) att[i] = static_cast<int>(i) / n_reporters;
  return att;
}

inline std::vector<int> square_col_targets(int n, int n_replicates) {
  std::vector<int> cols(static_cast<std::size_t>(n) * n_replicates);
  for (std::size_t k = 0; k < cols.size(); ++k) cols[k] = static_cast<int>(k) / n_replicates;
  return cols;
}

// Noise-free effect data: a reporter shows an effect exactly when the
// perturbation silences its parent in that timepoint's closed network.
inline std::vector<EffectDataset> generate_effects(const std::vector<Network>& path,
                                                   const std::vector<int>& attachments,
                                                   const std::vector<int>& col_targets,
                                                   double alpha, double beta) {
  require(!path.empty(), "generate_effects: empty path");
  const int n = path.front().n();
  const int m = static_cast<int>(attachments.size());
  const int cols = static_cast<int>(col_targets.size());
  std::vector<EffectDataset> out;
  out.reserve(path.size());
  for (const auto& g : path) {
    require(g.n() == n, "generate_effects: path dimension mismatch");
    const StateMatrix s = state_matrix(g, col_targets);
    std::vector<double> values(static_cast<std::size_t>(m) * cols);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < cols; ++k)
        values[static_cast<std::size_t>(i) * cols + k] = s.at(attachments[i], k) ? 1.0 : 0.0;
    out.emplace_back(n, col_targets, m, DataMode::binary, alpha, beta, std::move(values));
  }
  return out;
}

// Independent flips: absent effects appear with rate alpha, present ones
// vanish with rate beta. One uniform per entry in (timepoint, reporter,
// column) order, so the stream does not depend on the data values.
inline std::vector<EffectDataset> add_noise(const std::vector<EffectDataset>& data, double alpha,
                                            double beta, Rng& rng) {
  require(alpha >= 0.0 && alpha < 1.0, "add_noise: alpha must lie in [0, 1)");
  require(beta >= 0.0 && beta < 1.0, "add_noise: beta must lie in [0, 1)");
  std::vector<EffectDataset> out;
  out.reserve(data.size());
  for (const auto& d : data) {
    require(d.mode() == DataMode::binary, "add_noise: binary data required");
    EffectDataset noisy(d.n_components(), d.col_targets(), d.n_reporters(), DataMode::binary,
                        alpha, beta, d.values(), d.attachments());
    for (int i = 0; i < d.n_reporters(); ++i) {
      for (int k = 0; k < d.n_columns(); ++k) {
        const double u = rng.uniform();
        const bool present = d.at(i, k) == 1.0;
        if (present ? u < beta : u < alpha) noisy.set(i, k, present ? 0.0 : 1.0);
      }
    }
    out.push_back(std::move(noisy));
  }
  return out;
}

inline GroundTruth simulate(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  GroundTruth gt;
  gt.config = cfg;
  gt.path.reserve(cfg.timepoints);
  gt.path.push_back(generate_initial_network(cfg.n, cfg.initial_flip_fraction, rng));
  for (int t = 1; t < cfg.timepoints; ++t)
    gt.path.push_back(evolve_network(gt.path.back(), cfg.lambda, rng));
  gt.attachments = square_attachments(cfg.n, cfg.n_reporters);
  gt.col_targets = square_col_targets(cfg.n, cfg.n_replicates);
  gt.clean = generate_effects(gt.path, gt.attachments, gt.col_targets, cfg.alpha, cfg.beta);
  gt.noisy = add_noise(gt.clean, cfg.alpha, cfg.beta, rng);
  return gt;
}

// Every interval-th element starting at the first timepoint.
template <class T>
std::vector<T> subsample_time(const std::vector<T>& seq, int interval) {
  require(interval >= 1, "subsample_time: interval must be positive");
  std::vector<T> out;
  for (std::size_t i = 0; i < seq.size(); i += static_cast<std::size_t>(interval))
    out.push_back(seq[i]);
  return out;
}

// Random walk scale used by the study harnesses; rough posteriors (small
// lambda) take a wider kick.
inline double default_sigma(double lambda) { return lambda < 0.3 ? 2.0 : 0.65; }

struct SweepConfig {
  SimConfig base;                          // alpha/beta/lambda overridden per cell
  std::vector<double> lambdas{0.1, 0.5, 0.9};
  std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> betas{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::uint64_t> truth_seeds;  // per-lambda truth seeds; empty = derive from seed
  int datasets_per_cell = 50;
  int iterations = 12000;
  int burn_in = 2000;
  double hpd_coverage = 0.95;
  double cutoff = 0.5;
  std::uint64_t seed = 1;
  int threads = 0;
};

// One sampler run on one simulated dataset; everything the study harnesses
// aggregate, left unaggregated.
struct SweepRunResult {
  double lambda_true = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  int dataset_index = 0;
  double posterior_mean_lambda = 0.0;
  double mc_error = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;
  double lambda_hpd_lower = 0.0;
  double lambda_hpd_upper = 0.0;
  bool lambda_covered = false;
  double log_joint_hpd_lower = 0.0;
  double log_joint_hpd_upper = 0.0;
  double log_joint_truth = 0.0;
  bool log_joint_covered = false;
};

namespace detail {

struct SweepJob {
  int lambda_idx, alpha_idx, beta_idx, dataset_idx;
};

inline void run_jobs(int n_jobs, int threads, const std::function<void(int)>& job) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers > n_jobs) workers = n_jobs;
  if (workers == 1) {
    for (int i = 0; i < n_jobs; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_jobs) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

// Shared engine of the noise studies. Per lambda, one truth path is drawn
// from the experiment seed and held fixed; each grid cell then varies only
// the observation noise across datasets. Each run infers with a single
// chain and reports recovery and interval fields together.
inline std::vector<SweepRunResult> run_noise_sweep(const SweepConfig& cfg) {
  require(!cfg.lambdas.empty() && !cfg.alphas.empty() && !cfg.betas.empty(),
          "sweep: empty grid");
  require(cfg.datasets_per_cell >= 1, "sweep: need at least one dataset per cell");
  require(cfg.truth_seeds.empty() || cfg.truth_seeds.size() == cfg.lambdas.size(),
          "sweep: truth seeds must match the lambda grid");

  struct LambdaBlock {
    GroundTruth truth;
    std::uint64_t seed;
  };
  std::vector<LambdaBlock> blocks;
  blocks.reserve(cfg.lambdas.size());
  for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
    SimConfig sim = cfg.base;
    sim.lambda = cfg.lambdas[li];
    sim.seed = cfg.truth_seeds.empty() ? derive_seed(cfg.seed, li) : cfg.truth_seeds[li];
    blocks.push_back({simulate(sim), sim.seed});
  }

  const int cells_per_lambda = static_cast<int>(cfg.alphas.size() * cfg.betas.size());
  const int runs_per_lambda = cells_per_lambda * cfg.datasets_per_cell;
  const int n_jobs = static_cast<int>(cfg.lambdas.size()) * runs_per_lambda;
  std::vector<SweepRunResult> rows(n_jobs);

  detail::run_jobs(n_jobs, cfg.threads, [&](int idx) {
    const int li = idx / runs_per_lambda;
    int rest = idx % runs_per_lambda;
    const int ai = rest / (static_cast<int>(cfg.betas.size()) * cfg.datasets_per_cell);
    rest %= static_cast<int>(cfg.betas.size()) * cfg.datasets_per_cell;
    const int bi = rest / cfg.datasets_per_cell;
    const int di = rest % cfg.datasets_per_cell;

    const auto& block = blocks[li];
    const double lambda_true = cfg.lambdas[li];
    const double alpha = cfg.alphas[ai];
    const double beta = cfg.betas[bi];

    const std::uint64_t cell_seed =
        derive_seed(derive_seed(derive_seed(block.seed, ai + 1), bi + 1), di + 1);
    Rng noise_rng(cell_seed);
    auto clean = block.truth.clean;
    for (auto& d : clean) {
      // Re-tag the rates so inference sees the cell's noise level.
      d = EffectDataset(d.n_components(), d.col_targets(), d.n_reporters(), DataMode::binary,
                        alpha, beta, d.values());
    }
    const auto noisy = add_noise(clean, alpha, beta, noise_rng);

    SamplerConfig run;
    run.iterations = cfg.iterations;
    run.burn_in = cfg.burn_in;
    run.sigma = default_sigma(lambda_true);
    run.seed = derive_seed(cell_seed, 0x5a);
    run.init = InitMode::greedy_nem;
    run.lambda_init_auto = true;
    const Trace tr = run_chain(noisy, run);

    std::vector<double> kept_lambda(tr.lambda_samples.begin() + tr.burn_in,
                                    tr.lambda_samples.end());
    std::vector<double> kept_joint(tr.log_joint.begin() + tr.burn_in, tr.log_joint.end());

    SweepRunResult r;
    r.lambda_true = lambda_true;
    r.alpha = alpha;
    r.beta = beta;
    r.dataset_index = di;
    r.posterior_mean_lambda = mean_of(kept_lambda);
    r.mc_error = mc_error_lambda(r.posterior_mean_lambda, lambda_true);

    // The chain mixes over closed graphs, but thresholding their average
    // need not yield a closed graph; close the binarised mean so recovery
    // is judged where the model lives.
    auto inferred = binarize_networks(expected_network({tr}), tr.n, cfg.cutoff);
    for (auto& g : inferred) g = transitive_closure(g);
    const auto metrics = network_metrics(inferred, block.truth.path);
    r.sensitivity = metrics.sensitivity;
    r.specificity = metrics.specificity;
    r.accuracy = metrics.accuracy;

    const auto lam_hpd = hpd_interval(kept_lambda, cfg.hpd_coverage);
    r.lambda_hpd_lower = lam_hpd.lower;
    r.lambda_hpd_upper = lam_hpd.upper;
    r.lambda_covered = lam_hpd.lower <= lambda_true && lambda_true <= lam_hpd.upper;

    const auto joint_hpd = hpd_interval(kept_joint, cfg.hpd_coverage);
    r.log_joint_hpd_lower = joint_hpd.lower;
    r.log_joint_hpd_upper = joint_hpd.upper;
    ChainState truth_state;
    truth_state.path = block.truth.path;
    truth_state.refresh_distances();
    truth_state.emission_log.resize(noisy.size());
    for (std::size_t t = 0; t < noisy.size(); ++t)
      truth_state.emission_log[t] = EmissionModel(noisy[t]).log_prob(block.truth.path[t]);
    truth_state.set_kappa(logit(lambda_true));
    r.log_joint_truth = truth_state.log_joint();
    r.log_joint_covered =
        joint_hpd.lower <= r.log_joint_truth && r.log_joint_truth <= joint_hpd.upper;

    rows[idx] = r;
  });
  return rows;
}

// Noise robustness study: recovery error of lambda and of the networks
// across the (alpha, beta) grid.
inline std::vector<SweepRunResult> sensitivity_sweep(const SweepConfig& cfg) {
  return run_noise_sweep(cfg);
}

// Interval calibration study: HPD intervals for lambda and the log joint
// against their generating values.
inline std::vector<SweepRunResult> coverage_sweep(const SweepConfig& cfg) {
  return run_noise_sweep(cfg);
}

}  // namespace hmnem
