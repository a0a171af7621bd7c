#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hmnem/diagnostics.hpp"
#include "hmnem/io.hpp"
#include "hmnem/sampler.hpp"
#include "hmnem/simulator.hpp"
#include "hmnem/version.hpp"

namespace hmnem {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& what) {
  require(j.is_object(), what + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError(what + ": unknown key '" + key + "'");
  }
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

struct InputRecord {
  std::string role;
  std::string path;
  std::string hash;
};

inline json manifest_json(const std::string& command, const json& config,
                          const std::vector<InputRecord>& inputs,
                          const std::vector<std::string>& outputs) {
  json m;
  m["format"] = "hmnem-manifest v1";
  m["version"] = version;
  m["command"] = command;
  m["config"] = config;
  json in = json::array();
  for (const auto& rec : inputs)
    in.push_back({{"role", rec.role}, {"path", rec.path}, {"fnv1a64", rec.hash}});
  m["inputs"] = in;
  m["outputs"] = outputs;
  return m;
}

inline void write_manifest(const std::string& dir, const json& m) {
  write_file(join_path(dir, "manifest.json"), m.dump(2) + "\n");
}

inline InputRecord hash_input(const std::string& role, const std::string& path) {
  return {role, path, fnv1a64_hex(read_file(path))};
}

}  // namespace detail

// ---- simulate ----

struct SimulateCmd {
  SimConfig sim;
  DataMode mode = DataMode::binary;  // output encoding of the noisy data
  std::string out_dir = ".";
};

inline void from_json_simulate(const json& j, SimulateCmd& c) {
  detail::check_keys(j,
                     {"n", "timepoints", "reporters", "replicates", "alpha", "beta", "lambda",
                      "seed", "initial_flip_fraction", "mode", "out"},
                     "simulate config");
  c.sim.n = j.value("n", c.sim.n);
  c.sim.timepoints = j.value("timepoints", c.sim.timepoints);
  c.sim.n_reporters = j.value("reporters", c.sim.n_reporters);
  c.sim.n_replicates = j.value("replicates", c.sim.n_replicates);
  c.sim.alpha = j.value("alpha", c.sim.alpha);
  c.sim.beta = j.value("beta", c.sim.beta);
  c.sim.lambda = j.value("lambda", c.sim.lambda);
  c.sim.seed = j.value("seed", c.sim.seed);
  c.sim.initial_flip_fraction = j.value("initial_flip_fraction", c.sim.initial_flip_fraction);
  const std::string mode = j.value("mode", std::string("binary"));
  if (mode == "binary")
    c.mode = DataMode::binary;
  else if (mode == "probability")
    c.mode = DataMode::probability;
  else
    throw ValidationError("simulate config: mode must be 'binary' or 'probability'");
  c.out_dir = j.value("out", c.out_dir);
}

inline json to_json_simulate(const SimulateCmd& c) {
  json j;
  j["n"] = c.sim.n;
  j["timepoints"] = c.sim.timepoints;
  j["reporters"] = c.sim.n_reporters;
  j["replicates"] = c.sim.n_replicates;
  j["alpha"] = c.sim.alpha;
  j["beta"] = c.sim.beta;
  j["lambda"] = c.sim.lambda;
  j["seed"] = c.sim.seed;
  j["initial_flip_fraction"] = c.sim.initial_flip_fraction;
  j["mode"] = c.mode == DataMode::binary ? "binary" : "probability";
  j["out"] = c.out_dir;
  return j;
}

// Reporter-level effect probabilities implied by a binary call and the
// error rates: a called effect is real unless it was a false positive.
inline std::vector<EffectDataset> to_probability_data(const std::vector<EffectDataset>& data,
                                                      const std::vector<int>& attachments) {
  std::vector<EffectDataset> out;
  out.reserve(data.size());
  for (const auto& d : data) {
    std::vector<double> values(d.values());
    for (double& v : values) v = v == 1.0 ? 1.0 - d.beta() : d.alpha();
    out.emplace_back(d.n_components(), d.col_targets(), d.n_reporters(), DataMode::probability,
                     d.alpha(), d.beta(), std::move(values), attachments);
  }
  return out;
}

inline json cmd_simulate(const SimulateCmd& cmd) {
  cmd.sim.validate();
  const GroundTruth gt = simulate(cmd.sim);
  const std::vector<EffectDataset> observed =
      cmd.mode == DataMode::binary ? gt.noisy : to_probability_data(gt.noisy, gt.attachments);

  write_datasets(detail::join_path(cmd.out_dir, "dataset.txt"), observed);
  write_datasets(detail::join_path(cmd.out_dir, "dataset_clean.txt"), gt.clean);
  write_networks(detail::join_path(cmd.out_dir, "truth_networks.txt"), gt.path);
  write_attachments(detail::join_path(cmd.out_dir, "attachments.txt"), gt.attachments,
                    cmd.sim.n);

  const json m = detail::manifest_json(
      "simulate", to_json_simulate(cmd), {},
      {"dataset.txt", "dataset_clean.txt", "truth_networks.txt", "attachments.txt"});
  detail::write_manifest(cmd.out_dir, m);
  return m;
}

// ---- infer ----

struct InferCmd {
  std::string data_path;
  std::string attachments_path;    // empty = use whatever the data file carries
  std::string init_networks_path;  // required when init == given
  std::string mode = "auto";       // assert the data file's mode if not auto
  SamplerConfig sampler;
  int chains = 1;
  int threads = 0;
  double cutoff = 0.5;
  std::string out_dir = ".";
};

inline void from_json_infer(const json& j, InferCmd& c) {
  detail::check_keys(j,
                     {"data", "attachments", "init_networks", "mode", "iterations", "burnin",
                      "sigma", "seed", "init", "lambda_init", "lambda_init_auto", "fix_lambda",
                      "snapshot_interval", "chains", "threads", "cutoff", "out"},
                     "infer config");
  c.data_path = j.value("data", c.data_path);
  c.attachments_path = j.value("attachments", c.attachments_path);
  c.init_networks_path = j.value("init_networks", c.init_networks_path);
  c.mode = j.value("mode", c.mode);
  c.sampler.iterations = j.value("iterations", c.sampler.iterations);
  c.sampler.burn_in = j.value("burnin", c.sampler.burn_in);
  c.sampler.sigma = j.value("sigma", c.sampler.sigma);
  c.sampler.seed = j.value("seed", c.sampler.seed);
  const std::string init = j.value("init", std::string("greedy_nem"));
  if (init == "greedy_nem")
    c.sampler.init = InitMode::greedy_nem;
  else if (init == "empty")
    c.sampler.init = InitMode::empty;
  else if (init == "given")
    c.sampler.init = InitMode::given;
  else
    throw ValidationError("infer config: init must be 'greedy_nem', 'empty' or 'given'");
  c.sampler.lambda_init = j.value("lambda_init", c.sampler.lambda_init);
  c.sampler.lambda_init_auto = j.value("lambda_init_auto", c.sampler.lambda_init_auto);
  c.sampler.fix_lambda = j.value("fix_lambda", c.sampler.fix_lambda);
  c.sampler.snapshot_interval = j.value("snapshot_interval", c.sampler.snapshot_interval);
  c.chains = j.value("chains", c.chains);
  c.threads = j.value("threads", c.threads);
  c.cutoff = j.value("cutoff", c.cutoff);
  c.out_dir = j.value("out", c.out_dir);
}

inline json to_json_infer(const InferCmd& c) {
  json j;
  j["data"] = c.data_path;
  j["attachments"] = c.attachments_path;
  j["init_networks"] = c.init_networks_path;
  j["mode"] = c.mode;
  j["iterations"] = c.sampler.iterations;
  j["burnin"] = c.sampler.burn_in;
  j["sigma"] = c.sampler.sigma;
  j["seed"] = c.sampler.seed;
  j["init"] = c.sampler.init == InitMode::greedy_nem
                  ? "greedy_nem"
                  : (c.sampler.init == InitMode::empty ? "empty" : "given");
  j["lambda_init"] = c.sampler.lambda_init;
  j["lambda_init_auto"] = c.sampler.lambda_init_auto;
  j["fix_lambda"] = c.sampler.fix_lambda;
  j["snapshot_interval"] = c.sampler.snapshot_interval;
  j["chains"] = c.chains;
  j["threads"] = c.threads;
  j["cutoff"] = c.cutoff;
  j["out"] = c.out_dir;
  return j;
}

inline json cmd_infer(InferCmd cmd) {
  require(!cmd.data_path.empty(), "infer: no data file given");
  require(cmd.chains >= 1, "infer: chain count must be positive");
  require(cmd.mode == "auto" || cmd.mode == "binary" || cmd.mode == "probability",
          "infer: mode must be 'auto', 'binary' or 'probability'");

  std::vector<detail::InputRecord> inputs;
  inputs.push_back(detail::hash_input("data", cmd.data_path));
  std::vector<EffectDataset> data = read_datasets(cmd.data_path);

  if (cmd.mode != "auto") {
    const DataMode want = cmd.mode == "binary" ? DataMode::binary : DataMode::probability;
    require(data.front().mode() == want, "infer: data file mode does not match --mode");
  }
  if (!cmd.attachments_path.empty()) {
    inputs.push_back(detail::hash_input("attachments", cmd.attachments_path));
    const auto att = read_attachments(cmd.attachments_path);
    for (auto& d : data) d.set_attachments(att);
  }
  if (data.front().mode() == DataMode::probability)
    require(data.front().has_attachments(),
            "infer: probability-mode data needs an attachment map");
  if (cmd.sampler.init == InitMode::given) {
    require(!cmd.init_networks_path.empty(), "infer: init 'given' needs --init-networks");
    inputs.push_back(detail::hash_input("init_networks", cmd.init_networks_path));
    cmd.sampler.init_path = read_networks(cmd.init_networks_path);
  }
  if (data.front().mode() == DataMode::probability)
    require(cmd.sampler.init != InitMode::greedy_nem,
            "infer: greedy init needs binary data; use --init empty or given");

  const auto traces = run_chains_parallel(data, cmd.sampler, cmd.chains, cmd.threads);

  std::vector<std::string> outputs;
  for (int c = 0; c < cmd.chains; ++c) {
    const std::string name = "trace_chain" + std::to_string(c) + ".txt";
    write_trace(detail::join_path(cmd.out_dir, name), traces[c]);
    outputs.push_back(name);
  }
  const auto means = expected_network(traces);
  const int n = traces.front().n;
  write_edge_frequencies(detail::join_path(cmd.out_dir, "expected_network.txt"), means, n);
  outputs.push_back("expected_network.txt");
  write_networks(detail::join_path(cmd.out_dir, "map_networks.txt"),
                 binarize_networks(means, n, cmd.cutoff));
  outputs.push_back("map_networks.txt");

  std::vector<double> pooled;
  for (const auto& tr : traces)
    pooled.insert(pooled.end(), tr.lambda_samples.begin() + tr.burn_in,
                  tr.lambda_samples.end());
  std::string summary;
  summary += "pooled_lambda_mean " + format_double(mean_of(pooled)) + "\n";
  summary += "pooled_lambda_sd " +
             format_double(pooled.size() > 1 ? std::sqrt(variance_of(pooled)) : 0.0) + "\n";
  for (int c = 0; c < cmd.chains; ++c)
    summary += "kappa_rejection_rate_chain" + std::to_string(c) + " " +
               format_double(rejection_rate(traces[c].kappa_accepted, traces[c].burn_in)) + "\n";
  write_file(detail::join_path(cmd.out_dir, "summary.txt"), summary);
  outputs.push_back("summary.txt");

  const json m = detail::manifest_json("infer", to_json_infer(cmd), inputs, outputs);
  detail::write_manifest(cmd.out_dir, m);
  return m;
}

// ---- diagnose ----

struct DiagnoseCmd {
  std::vector<std::string> trace_paths;
  double window_fraction = 0.10;
  double hpd_coverage = 0.95;
  std::string out_dir = ".";
};

inline void from_json_diagnose(const json& j, DiagnoseCmd& c) {
  detail::check_keys(j, {"traces", "window_fraction", "hpd_coverage", "out"}, "diagnose config");
  if (j.contains("traces")) c.trace_paths = j.at("traces").get<std::vector<std::string>>();
  c.window_fraction = j.value("window_fraction", c.window_fraction);
  c.hpd_coverage = j.value("hpd_coverage", c.hpd_coverage);
  c.out_dir = j.value("out", c.out_dir);
}

inline json to_json_diagnose(const DiagnoseCmd& c) {
  json j;
  j["traces"] = c.trace_paths;
  j["window_fraction"] = c.window_fraction;
  j["hpd_coverage"] = c.hpd_coverage;
  j["out"] = c.out_dir;
  return j;
}

inline json cmd_diagnose(const DiagnoseCmd& cmd) {
  require(!cmd.trace_paths.empty(), "diagnose: no trace files given");
  require(cmd.window_fraction > 0.0 && cmd.window_fraction <= 1.0,
          "diagnose: window fraction must lie in (0, 1]");

  std::vector<detail::InputRecord> inputs;
  std::vector<Trace> traces;
  for (std::size_t i = 0; i < cmd.trace_paths.size(); ++i) {
    inputs.push_back(detail::hash_input("trace" + std::to_string(i), cmd.trace_paths[i]));
    traces.push_back(read_trace(cmd.trace_paths[i]));
  }
  const int iterations = traces.front().iterations;
  const int burn_in = traces.front().burn_in;
  for (const auto& tr : traces)
    require(tr.iterations == iterations && tr.burn_in == burn_in,
            "diagnose: traces disagree on iterations or burn-in");
  require(iterations - burn_in >= 2, "diagnose: need at least two post burn-in sweeps");

  std::vector<std::vector<double>> lambda_full, joint_full, lambda_kept, joint_kept;
  for (const auto& tr : traces) {
    lambda_full.push_back(tr.lambda_samples);
    joint_full.push_back(tr.log_joint);
    lambda_kept.emplace_back(tr.lambda_samples.begin() + burn_in, tr.lambda_samples.end());
    joint_kept.emplace_back(tr.log_joint.begin() + burn_in, tr.log_joint.end());
  }
  std::vector<double> lambda_pooled, joint_pooled;
  for (const auto& c : lambda_kept) lambda_pooled.insert(lambda_pooled.end(), c.begin(), c.end());
  for (const auto& c : joint_kept) joint_pooled.insert(joint_pooled.end(), c.begin(), c.end());

  json d;
  d["chains"] = traces.size();
  d["iterations"] = iterations;
  d["burn_in"] = burn_in;

  auto scalar_block = [&](const std::vector<std::vector<double>>& kept,
                          const std::vector<double>& pooled) {
    json b;
    b["pooled_mean"] = mean_of(pooled);
    b["pooled_sd"] = pooled.size() > 1 ? std::sqrt(variance_of(pooled)) : 0.0;
    const auto hpd = hpd_interval(pooled, cmd.hpd_coverage);
    b["hpd_lower"] = hpd.lower;
    b["hpd_upper"] = hpd.upper;
    b["hpd_coverage"] = cmd.hpd_coverage;
    if (kept.size() >= 2) {
      const auto r = psrf(kept);
      b["sqrt_r_hat"] = r.sqrt_r_hat;
      b["sqrt_r_hat_degenerate"] = r.degenerate;
    } else {
      b["sqrt_r_hat"] = nullptr;
      b["sqrt_r_hat_degenerate"] = false;
    }
    json per_chain = json::array();
    for (const auto& c : kept) {
      const auto e = ess(c);
      per_chain.push_back(
          {{"mean", mean_of(c)}, {"ess", e.value}, {"ess_zero_variance", e.zero_variance}});
    }
    b["per_chain"] = per_chain;
    return b;
  };
  d["lambda"] = scalar_block(lambda_kept, lambda_pooled);
  d["log_joint"] = scalar_block(joint_kept, joint_pooled);

  json kappa;
  json per_chain = json::array();
  double rej_sum = 0.0;
  for (const auto& tr : traces) {
    const double rej = rejection_rate(tr.kappa_accepted, burn_in);
    per_chain.push_back(rej);
    rej_sum += rej;
  }
  kappa["rejection_rate_mean"] = rej_sum / static_cast<double>(traces.size());
  kappa["rejection_rate_per_chain"] = per_chain;
  d["kappa"] = kappa;

  std::string running = "start,lambda_sqrt_r_hat,lambda_degenerate,log_joint_sqrt_r_hat,"
                        "log_joint_degenerate\n";
  if (traces.size() >= 2) {
    int window = static_cast<int>(std::floor(cmd.window_fraction * iterations));
    window = std::clamp(window, 2, iterations);
    const int stride = std::max(1, window / 2);
    const auto lam_run = running_psrf(lambda_full, window, stride);
    const auto joint_run = running_psrf(joint_full, window, stride);
    for (std::size_t i = 0; i < lam_run.size(); ++i) {
      running += std::to_string(lam_run[i].start) + ',' +
                 format_double(lam_run[i].sqrt_r_hat) + ',' +
                 (lam_run[i].degenerate ? "1" : "0") + ',' +
                 format_double(joint_run[i].sqrt_r_hat) + ',' +
                 (joint_run[i].degenerate ? "1" : "0") + '\n';
    }
  }

  write_file(detail::join_path(cmd.out_dir, "diagnostics.json"), d.dump(2) + "\n");
  write_file(detail::join_path(cmd.out_dir, "running_psrf.csv"), running);

  const json m = detail::manifest_json("diagnose", to_json_diagnose(cmd), inputs,
                                       {"diagnostics.json", "running_psrf.csv"});
  detail::write_manifest(cmd.out_dir, m);
  return m;
}

// ---- summarize ----

struct SummarizeCmd {
  std::string expected_path;
  std::string truth_path;  // optional
  double cutoff = 0.5;
  std::string out_dir = ".";
};

inline void from_json_summarize(const json& j, SummarizeCmd& c) {
  detail::check_keys(j, {"expected", "truth", "cutoff", "out"}, "summarize config");
  c.expected_path = j.value("expected", c.expected_path);
  c.truth_path = j.value("truth", c.truth_path);
  c.cutoff = j.value("cutoff", c.cutoff);
  c.out_dir = j.value("out", c.out_dir);
}

inline json to_json_summarize(const SummarizeCmd& c) {
  json j;
  j["expected"] = c.expected_path;
  j["truth"] = c.truth_path;
  j["cutoff"] = c.cutoff;
  j["out"] = c.out_dir;
  return j;
}

inline json cmd_summarize(const SummarizeCmd& cmd) {
  require(!cmd.expected_path.empty(), "summarize: no expected-network file given");
  std::vector<detail::InputRecord> inputs;
  inputs.push_back(detail::hash_input("expected", cmd.expected_path));
  const EdgeFrequencies ef = read_edge_frequencies(cmd.expected_path);

  std::string longfmt = "t,from,to,frequency\n";
  for (std::size_t t = 0; t < ef.means.size(); ++t)
    for (int from = 0; from < ef.n; ++from)
      for (int to = 0; to < ef.n; ++to) {
        if (from == to) continue;
        longfmt += std::to_string(t) + ',' + std::to_string(from) + ',' + std::to_string(to) +
                   ',' + format_double(ef.means[t][static_cast<std::size_t>(from) * ef.n + to]) +
                   '\n';
      }
  write_file(detail::join_path(cmd.out_dir, "expected_long.csv"), longfmt);
  const auto map_path = binarize_networks(ef.means, ef.n, cmd.cutoff);
  write_networks(detail::join_path(cmd.out_dir, "map_networks.txt"), map_path);
  std::vector<std::string> outputs{"expected_long.csv", "map_networks.txt"};

  if (!cmd.truth_path.empty()) {
    inputs.push_back(detail::hash_input("truth", cmd.truth_path));
    const auto truth = read_networks(cmd.truth_path);
    const auto metrics = network_metrics(map_path, truth);
    json mj;
    mj["tp"] = metrics.tp;
    mj["fp"] = metrics.fp;
    mj["tn"] = metrics.tn;
    mj["fn"] = metrics.fn;
    mj["sensitivity"] = metrics.sensitivity;
    mj["specificity"] = metrics.specificity;
    mj["accuracy"] = metrics.accuracy;
    mj["no_positives"] = metrics.no_positives;
    mj["no_negatives"] = metrics.no_negatives;
    write_file(detail::join_path(cmd.out_dir, "metrics.json"), mj.dump(2) + "\n");
    outputs.push_back("metrics.json");
  }

  const json m = detail::manifest_json("summarize", to_json_summarize(cmd), inputs, outputs);
  detail::write_manifest(cmd.out_dir, m);
  return m;
}

// ---- config loading and manifest rerun ----

inline json load_config_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config '") + path + "': " + e.what());
  }
  require(j.is_object(), "config '" + path + "': expected a JSON object");
  return j;
}

// A manifest doubles as a config file: the embedded config block reproduces
// the run. Returns the command name and its config object.
inline std::pair<std::string, json> manifest_config(const json& j) {
  require(j.contains("command") && j.contains("config"),
          "manifest: missing 'command' or 'config'");
  return {j.at("command").get<std::string>(), j.at("config")};
}

inline json run_command(const std::string& command, const json& config,
                        const std::string& out_override = "") {
  json cfg = config;
  if (!out_override.empty()) cfg["out"] = out_override;
  if (command == "simulate") {
    SimulateCmd c;
    from_json_simulate(cfg, c);
    return cmd_simulate(c);
  }
  if (command == "infer") {
    InferCmd c;
    from_json_infer(cfg, c);
    return cmd_infer(c);
  }
  if (command == "diagnose") {
    DiagnoseCmd c;
    from_json_diagnose(cfg, c);
    return cmd_diagnose(c);
  }
  if (command == "summarize") {
    SummarizeCmd c;
    from_json_summarize(cfg, c);
    return cmd_summarize(c);
  }
  throw ValidationError("unknown command '" + command + "'");
}

inline json rerun_manifest(const std::string& manifest_path, const std::string& out_override = "") {
  const json m = load_config_file(manifest_path);
  const auto [command, config] = manifest_config(m);
  return run_command(command, config, out_override);
}

}  // namespace hmnem
