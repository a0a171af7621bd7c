#pragma once

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "hmnem/dataset.hpp"
#include "hmnem/graph.hpp"
#include "hmnem/likelihood.hpp"
#include "hmnem/numeric.hpp"
#include "hmnem/rng.hpp"
#include "hmnem/transition.hpp"

namespace hmnem {

// Normaliser evaluated from log lambda and log (1 - lambda) directly, so a
// kappa far in either tail still yields a finite value.
inline double log_transition_normalizer_logs(double log_lambda, double log_one_minus_lambda,
                                             int n) {
  const int n_e = n * (n - 1);
  std::vector<double> terms(n_e + 1);
  for (int e = 0; e <= n_e; ++e)
    terms[e] = log_binomial(n_e, e) + log_lambda + (e - 1) * log_one_minus_lambda;
  return log_sum_exp(terms);
}

enum class InitMode { empty, greedy_nem, given };

struct SamplerConfig {
  int iterations = 12000;
  int burn_in = 2000;
  double sigma = 0.65;       // random walk scale on kappa
  std::uint64_t seed = 1;
  InitMode init = InitMode::greedy_nem;
  std::vector<Network> init_path;  // used when init == given
  double lambda_init = 0.5;
  bool lambda_init_auto = false;   // start lambda at the init path's estimate
  bool fix_lambda = false;         // skip kappa moves; lambda stays lambda_init
  int snapshot_interval = 0;       // record full paths every k-th sweep; 0 = off
};

struct PathSnapshot {
  int iteration = 0;
  std::vector<Network> path;
};

struct Trace {
  int iterations = 0;
  int burn_in = 0;
  int n = 0;
  int timepoints = 0;
  std::uint64_t seed = 0;
  std::vector<double> lambda_samples;        // one per sweep
  std::vector<double> log_joint;             // unnormalised, one per sweep
  std::vector<std::uint8_t> kappa_accepted;  // one per sweep; zero when lambda is fixed
  std::vector<std::uint32_t> edge_sums;      // timepoints x n x n post burn-in counts
  std::vector<PathSnapshot> snapshots;

  int kept() const { return iterations - burn_in; }
  std::uint32_t edge_sum(int t, int from, int to) const {
    return edge_sums[(static_cast<std::size_t>(t) * n + from) * n + to];
  }
};

// Mutable state of one chain: the network path, its adjacent distances and
// cached emission terms, and the smoothness parameter in logit space with
// the lambda-derived quantities kept alongside.
struct ChainState {
  std::vector<Network> path;
  std::vector<int> eps;              // graph_distance(path[t], path[t+1])
  std::vector<double> emission_log;  // per-timepoint emission term
  double kappa = 0.0;
  double lambda = 0.5;
  double log_lambda = 0.0;
  double log_one_minus_lambda = 0.0;
  double log_z = 0.0;

  int timepoints() const { return static_cast<int>(path.size()); }
  int n() const { return path.empty() ? 0 : path.front().n(); }

  void set_kappa(double k) {
    kappa = k;
    lambda = sigmoid(k);
    log_lambda = log_sigmoid(k);
    log_one_minus_lambda = log_sigmoid(-k);
    log_z = log_transition_normalizer_logs(log_lambda, log_one_minus_lambda, n());
  }

  void refresh_distances() {
    eps.assign(path.size() > 1 ? path.size() - 1 : 0, 0);
    for (std::size_t t = 0; t + 1 < path.size(); ++t)
      eps[t] = graph_distance(path[t], path[t + 1]);
  }

  int distance_sum() const {
    int s = 0;
    for (int e : eps) s += e;
    return s;
  }

  // Unnormalised log joint of the current state: emissions plus the chain
  // of transition terms (the flat prior on the first network is dropped).
  double log_joint() const {
    double total = 0.0;
    for (double e : emission_log) total += e;
    const int k = timepoints() - 1;
    total += k * (log_lambda - log_z);
    total += (distance_sum() - k) * log_one_minus_lambda;
    return total;
  }
};

// Uniform single-edge flip proposal. Returns the flipped pair; the caller
// applies it through flip_edge or toggle_edge.
inline std::pair<int, int> propose_flip(const Network& g, Rng& rng) {
  const int n = g.n();
  const int slot = rng.below_int(g.edge_slots());
  const int from = slot / (n - 1);
  int to = slot % (n - 1);
  if (to >= from) ++to;
  return {from, to};
}

inline Network propose_graph(const Network& g, Rng& rng) {
  const auto [from, to] = propose_flip(g, rng);
  return flip_edge(g, from, to);
}

// Log acceptance ratio for replacing path[t] by `candidate` whose emission
// term is `candidate_emission`. Within one lambda the transition
// normalisers cancel, leaving the distance changes times log (1 - lambda).
inline double state_log_ratio(const ChainState& st, int t, const Network& candidate,
                              double candidate_emission) {
  require(t >= 0 && t < st.timepoints(), "state_log_ratio: timepoint out of range");
  double delta = candidate_emission - st.emission_log[t];
  int d_eps = 0;
  if (t > 0) d_eps += graph_distance(st.path[t - 1], candidate) - st.eps[t - 1];
  if (t + 1 < st.timepoints()) d_eps += graph_distance(candidate, st.path[t + 1]) - st.eps[t];
  delta += d_eps * st.log_one_minus_lambda;
  return delta;
}

// One Metropolis move on the network at position t. Returns whether the
// proposal was accepted.
//
// The chain lives on transitively closed networks: the marginal likelihood
// sees a graph only through its closure, so on unrestricted graphs the
// transition prior is free to trade implied edges for smoothness and the
// smoothness posterior inflates far past its generating value. Flips that
// break closure are rejected outright; the flip proposal itself stays
// symmetric, so no Hastings correction is needed.
inline bool state_update(ChainState& st, int t, const std::vector<EmissionModel>& models,
                         Rng& rng) {
  const auto [from, to] = propose_flip(st.path[t], rng);
  Network candidate = flip_edge(st.path[t], from, to);
  if (!is_transitively_closed(candidate)) return false;
  const double cand_emission = models[t].log_prob(candidate);
  const double delta = state_log_ratio(st, t, candidate, cand_emission);
  if (delta >= 0.0 || std::log(rng.uniform_pos()) < delta) {
    if (t > 0) st.eps[t - 1] = graph_distance(st.path[t - 1], candidate);
    if (t + 1 < st.timepoints()) st.eps[t] = graph_distance(candidate, st.path[t + 1]);
    st.path[t] = std::move(candidate);
    st.emission_log[t] = cand_emission;
    return true;
  }
  return false;
}

// Log acceptance ratio for a kappa random walk move. The transition terms
// do not telescope across lambda because the normaliser changes, and the
// flat-on-lambda prior contributes the Jacobian lambda (1 - lambda) of the
// logit reparameterisation on each side.
inline double kappa_log_ratio(const ChainState& st, double kappa_candidate) {
  const double ll = log_sigmoid(kappa_candidate);
  const double lq = log_sigmoid(-kappa_candidate);
  const double lz = log_transition_normalizer_logs(ll, lq, st.n());
  const int k = st.timepoints() - 1;
  const int s = st.distance_sum();
  double delta = k * (ll - st.log_lambda) + (s - k) * (lq - st.log_one_minus_lambda) -
                 k * (lz - st.log_z);
  delta += (ll + lq) - (st.log_lambda + st.log_one_minus_lambda);
  return delta;
}

inline bool kappa_update(ChainState& st, double sigma, Rng& rng) {
  const double candidate = rng.normal(st.kappa, sigma);
  const double delta = kappa_log_ratio(st, candidate);
  if (delta >= 0.0 || std::log(rng.uniform_pos()) < delta) {
    st.set_kappa(candidate);
    return true;
  }
  return false;
}

inline void validate_sampler_config(const SamplerConfig& cfg) {
  require(cfg.iterations >= 1, "sampler: iterations must be positive");
  require(cfg.burn_in >= 0 && cfg.burn_in < cfg.iterations,
          "sampler: burn-in must lie in [0, iterations)");
  require(cfg.sigma > 0.0, "sampler: sigma must be positive");
  require(cfg.lambda_init > 0.0 && cfg.lambda_init < 1.0,
          "sampler: lambda_init must lie in (0, 1)");
  require(cfg.snapshot_interval >= 0, "sampler: snapshot interval must be nonnegative");
}

inline std::vector<EmissionModel> build_emission_models(const std::vector<EffectDataset>& data) {
  require(!data.empty(), "sampler: need at least one timepoint");
  const int n = data.front().n_components();
  std::vector<EmissionModel> models;
  models.reserve(data.size());
  for (const auto& d : data) {
    require(d.n_components() == n, "sampler: timepoints disagree on component count");
    models.emplace_back(d);
  }
  return models;
}

// Posterior mean of lambda given only a path's transition distances, under
// the uniform prior. Starting kappa here instead of at a fixed value keeps
// early sweeps from smoothing a rough init path under a mismatched lambda,
// a trap the chain escapes only slowly once caught.
inline double path_lambda_estimate(const std::vector<Network>& path) {
  std::vector<int> eps;
  for (std::size_t t = 1; t < path.size(); ++t)
    eps.push_back(graph_distance(path[t - 1], path[t]));
  if (eps.empty()) return 0.5;
  const int n = path.front().n();
  double wsum = 0.0, lsum = 0.0, max_log = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> pts;  // (lambda, log weight)
  for (double kappa = -12.0; kappa <= 12.0; kappa += 0.005) {
    const double lam = sigmoid(kappa);
    const double lz = log_transition_normalizer(lam, n);
    double lw = std::log(lam) + std::log1p(-lam);  // uniform prior on a kappa grid
    for (int e : eps) lw += std::log(lam) + (e - 1) * std::log1p(-lam) - lz;
    pts.push_back({lam, lw});
    max_log = std::max(max_log, lw);
  }
  for (const auto& [lam, lw] : pts) {
    const double w = std::exp(lw - max_log);
    wsum += w;
    lsum += lam * w;
  }
  return lsum / wsum;
}

inline std::vector<Network> initial_path(const std::vector<EffectDataset>& data,
                                         const SamplerConfig& cfg) {
  const int n = data.front().n_components();
  const int timepoints = static_cast<int>(data.size());
  std::vector<Network> path;
  switch (cfg.init) {
    case InitMode::empty:
      path.assign(timepoints, Network(n));
      break;
    case InitMode::greedy_nem:
      // The greedy search is closure-blind; close its output so the chain
      // starts inside its state space.
      path.reserve(timepoints);
      for (const auto& d : data)
        path.push_back(transitive_closure(greedy_static_nem(d, Network(n))));
      break;
    case InitMode::given:
      require(cfg.init_path.size() == static_cast<std::size_t>(timepoints),
              "sampler: init path length must match timepoints");
      for (const auto& g : cfg.init_path) {
        require(g.n() == n, "sampler: init path dimension mismatch");
        require(is_transitively_closed(g),
                "sampler: init networks must be transitively closed");
      }
      path = cfg.init_path;
      break;
  }
  return path;
}

inline Trace run_chain(const std::vector<EmissionModel>& models, const SamplerConfig& cfg,
                       std::vector<Network> init) {
  validate_sampler_config(cfg);
  const int timepoints = static_cast<int>(models.size());
  const int n = models.front().dataset().n_components();

  ChainState st;
  st.path = std::move(init);
  st.refresh_distances();
  st.emission_log.resize(timepoints);
  for (int t = 0; t < timepoints; ++t) st.emission_log[t] = models[t].log_prob(st.path[t]);
  st.set_kappa(logit(cfg.lambda_init_auto ? path_lambda_estimate(st.path) : cfg.lambda_init));

  Trace tr;
  tr.iterations = cfg.iterations;
  tr.burn_in = cfg.burn_in;
  tr.n = n;
  tr.timepoints = timepoints;
  tr.seed = cfg.seed;
  tr.lambda_samples.reserve(cfg.iterations);
  tr.log_joint.reserve(cfg.iterations);
  tr.kappa_accepted.reserve(cfg.iterations);
  tr.edge_sums.assign(static_cast<std::size_t>(timepoints) * n * n, 0);

  Rng rng(cfg.seed);
  for (int i = 1; i <= cfg.iterations; ++i) {
    for (int t = 0; t < timepoints; ++t) state_update(st, t, models, rng);
    bool accepted = false;
    if (!cfg.fix_lambda) accepted = kappa_update(st, cfg.sigma, rng);
    tr.lambda_samples.push_back(st.lambda);
    tr.log_joint.push_back(st.log_joint());
    tr.kappa_accepted.push_back(accepted ? 1 : 0);
    if (i > cfg.burn_in) {
      for (int t = 0; t < timepoints; ++t) {
        auto* counts = tr.edge_sums.data() + static_cast<std::size_t>(t) * n * n;
        for (int from = 0; from < n; ++from) {
          std::uint64_t bits = st.path[t].row(from);
          while (bits) {
            const int to = std::countr_zero(bits);
            bits &= bits - 1;
            ++counts[from * n + to];
          }
        }
      }
    }
    if (cfg.snapshot_interval > 0 && i % cfg.snapshot_interval == 0)
      tr.snapshots.push_back({i, st.path});
  }
  return tr;
}

inline Trace run_chain(const std::vector<EffectDataset>& data, const SamplerConfig& cfg) {
  const auto models = build_emission_models(data);
  return run_chain(models, cfg, initial_path(data, cfg));
}

// Independent chains with per-chain seeds derived from the base seed. Each
// chain's stream depends only on its own seed, so results are identical
// whatever the thread count.
inline std::vector<Trace> run_chains_parallel(const std::vector<EffectDataset>& data,
                                              const SamplerConfig& cfg, int n_chains,
                                              int n_threads = 0) {
  require(n_chains >= 1, "sampler: need at least one chain");
  const auto models = build_emission_models(data);
  const auto init = initial_path(data, cfg);
  std::vector<Trace> traces(n_chains);

  int workers = n_threads > 0 ? n_threads : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers > n_chains) workers = n_chains;

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= n_chains) return;
      try {
        SamplerConfig chain_cfg = cfg;
        chain_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(c));
        traces[c] = run_chain(models, chain_cfg, init);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return traces;
}

// Per-timepoint posterior edge frequencies pooled over chains: entry
// (t, from, to) is the fraction of kept sweeps whose network carried the
// edge. Row-major n x n per timepoint.
inline std::vector<std::vector<double>> expected_network(const std::vector<Trace>& traces) {
  require(!traces.empty(), "expected_network: no traces");
  const int timepoints = traces.front().timepoints;
  const int n = traces.front().n;
  std::uint64_t kept_total = 0;
  for (const auto& tr : traces) {
    require(tr.timepoints == timepoints && tr.n == n, "expected_network: trace shape mismatch");
    require(tr.kept() > 0, "expected_network: trace has no post burn-in sweeps");
    kept_total += static_cast<std::uint64_t>(tr.kept());
  }
  std::vector<std::vector<double>> means(timepoints,
                                         std::vector<double>(static_cast<std::size_t>(n) * n, 0.0));
  for (const auto& tr : traces)
    for (int t = 0; t < timepoints; ++t)
      for (int e = 0; e < n * n; ++e)
        means[t][e] += tr.edge_sums[static_cast<std::size_t>(t) * n * n + e];
  for (auto& mat : means)
    for (auto& v : mat) v /= static_cast<double>(kept_total);
  return means;
}

// Map edge frequencies to a network path: edge present iff its frequency
// strictly exceeds the cutoff, so ties at the cutoff stay absent.
inline std::vector<Network> binarize_networks(const std::vector<std::vector<double>>& means,
                                              int n, double cutoff = 0.5) {
  require(cutoff >= 0.0 && cutoff < 1.0, "binarize_networks: cutoff must lie in [0, 1)");
  std::vector<Network> path;
  path.reserve(means.size());
  for (const auto& mat : means) {
    require(mat.size() == static_cast<std::size_t>(n) * n, "binarize_networks: shape mismatch");
    Network g(n);
    for (int from = 0; from < n; ++from)
      for (int to = 0; to < n; ++to)
        if (from != to && mat[static_cast<std::size_t>(from) * n + to] > cutoff)
          g.set_edge(from, to, true);
    path.push_back(std::move(g));
  }
  return path;
}

}  // namespace hmnem
