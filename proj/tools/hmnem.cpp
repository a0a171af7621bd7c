// Command line front end: simulate / infer / diagnose / summarize / rerun.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hmnem/hmnem.hpp"

namespace {

using hmnem::json;

// Flags the user actually passed override config-file values; everything
// else keeps the config (or built-in) value.
template <class T>
void apply(const CLI::App* sub, const std::string& flag, T& target, const T& parsed) {
  if (sub->count(flag) > 0) target = parsed;
}

json config_or_empty(const CLI::App* sub, const std::string& path) {
  if (sub->count("--config") == 0) return json::object();
  json j = hmnem::load_config_file(path);
  if (j.contains("command") && j.contains("config")) {
    // A manifest was passed; unwrap its embedded config.
    return j.at("config");
  }
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"hidden Markov nested effects models"};
  app.set_version_flag("--version", std::string("hmnem ") + hmnem::version);
  app.require_subcommand(1);

  std::string config_path;

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic time course");
  hmnem::SimulateCmd sim_defaults;
  int sim_n = sim_defaults.sim.n, sim_t = sim_defaults.sim.timepoints;
  int sim_rep = sim_defaults.sim.n_reporters, sim_repl = sim_defaults.sim.n_replicates;
  double sim_alpha = sim_defaults.sim.alpha, sim_beta = sim_defaults.sim.beta;
  double sim_lambda = sim_defaults.sim.lambda;
  double sim_flip = sim_defaults.sim.initial_flip_fraction;
  std::uint64_t sim_seed = sim_defaults.sim.seed;
  std::string sim_mode = "binary", sim_out = ".";
  sim->add_option("--config", config_path, "JSON config or manifest");
  sim->add_option("--n", sim_n, "pathway components");
  sim->add_option("--timepoints", sim_t, "timepoints");
  sim->add_option("--reporters", sim_rep, "reporters per component");
  sim->add_option("--replicates", sim_repl, "replicate columns per perturbation");
  sim->add_option("--alpha", sim_alpha, "false positive rate");
  sim->add_option("--beta", sim_beta, "false negative rate");
  sim->add_option("--lambda", sim_lambda, "transition smoothness");
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--flip-fraction", sim_flip, "initial network flip fraction");
  sim->add_option("--mode", sim_mode, "output mode: binary or probability")
      ->check(CLI::IsMember({"binary", "probability"}));
  sim->add_option("--out", sim_out, "output directory");

  // infer
  auto* inf = app.add_subcommand("infer", "sample network paths and smoothness");
  hmnem::InferCmd inf_defaults;
  std::string inf_data, inf_att, inf_initnets, inf_init = "greedy_nem", inf_mode = "auto";
  std::string inf_out = ".";
  int inf_chains = inf_defaults.chains, inf_threads = inf_defaults.threads;
  int inf_iter = inf_defaults.sampler.iterations, inf_burn = inf_defaults.sampler.burn_in;
  int inf_snap = inf_defaults.sampler.snapshot_interval;
  double inf_sigma = inf_defaults.sampler.sigma;
  double inf_lambda0 = inf_defaults.sampler.lambda_init, inf_cutoff = inf_defaults.cutoff;
  std::uint64_t inf_seed = inf_defaults.sampler.seed;
  bool inf_fix = false;
  inf->add_option("--config", config_path, "JSON config or manifest");
  inf->add_option("--data", inf_data, "dataset file");
  inf->add_option("--attachments", inf_att, "attachment map file");
  inf->add_option("--mode", inf_mode, "assert data mode: binary or probability")
      ->check(CLI::IsMember({"auto", "binary", "probability"}));
  inf->add_option("--chains", inf_chains, "independent chains");
  inf->add_option("--threads", inf_threads, "worker threads (0 = hardware)");
  inf->add_option("--iterations", inf_iter, "sweeps per chain");
  inf->add_option("--burnin", inf_burn, "discarded initial sweeps");
  inf->add_option("--sigma", inf_sigma, "random walk scale on kappa");
  inf->add_option("--seed", inf_seed, "base seed; chains derive their own");
  inf->add_option("--init", inf_init, "start: greedy_nem, empty or given")
      ->check(CLI::IsMember({"greedy_nem", "empty", "given"}));
  inf->add_option("--init-networks", inf_initnets, "networks file for --init given");
  inf->add_option("--lambda-init", inf_lambda0, "initial smoothness");
  inf->add_flag("--fix-lambda", inf_fix, "keep lambda at its initial value");
  inf->add_option("--snapshot-interval", inf_snap, "record paths every k-th sweep");
  inf->add_option("--cutoff", inf_cutoff, "edge frequency cutoff for the map networks");
  inf->add_option("--out", inf_out, "output directory");

  // diagnose
  auto* dia = app.add_subcommand("diagnose", "convergence and posterior summaries");
  hmnem::DiagnoseCmd dia_defaults;
  std::vector<std::string> dia_traces;
  double dia_window = dia_defaults.window_fraction, dia_cov = dia_defaults.hpd_coverage;
  std::string dia_out = ".";
  dia->add_option("--config", config_path, "JSON config or manifest");
  dia->add_option("traces", dia_traces, "trace files");
  dia->add_option("--window-fraction", dia_window, "running window as a fraction of sweeps");
  dia->add_option("--hpd-coverage", dia_cov, "HPD mass");
  dia->add_option("--out", dia_out, "output directory");

  // summarize
  auto* sum = app.add_subcommand("summarize", "tabulate an expected network");
  hmnem::SummarizeCmd sum_defaults;
  std::string sum_expected, sum_truth, sum_out = ".";
  double sum_cutoff = sum_defaults.cutoff;
  sum->add_option("--config", config_path, "JSON config or manifest");
  sum->add_option("--expected", sum_expected, "edge frequency file");
  sum->add_option("--truth", sum_truth, "true networks for recovery metrics");
  sum->add_option("--cutoff", sum_cutoff, "edge frequency cutoff");
  sum->add_option("--out", sum_out, "output directory");

  // rerun
  auto* rer = app.add_subcommand("rerun", "repeat a run from its manifest");
  std::string rer_manifest, rer_out;
  rer->add_option("manifest", rer_manifest, "manifest.json of a previous run")->required();
  rer->add_option("--out", rer_out, "redirect outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) {
    hmnem::SimulateCmd c;
    hmnem::from_json_simulate(config_or_empty(sim, config_path), c);
    apply(sim, "--n", c.sim.n, sim_n);
    apply(sim, "--timepoints", c.sim.timepoints, sim_t);
    apply(sim, "--reporters", c.sim.n_reporters, sim_rep);
    apply(sim, "--replicates", c.sim.n_replicates, sim_repl);
    apply(sim, "--alpha", c.sim.alpha, sim_alpha);
    apply(sim, "--beta", c.sim.beta, sim_beta);
    apply(sim, "--lambda", c.sim.lambda, sim_lambda);
    apply(sim, "--seed", c.sim.seed, sim_seed);
    apply(sim, "--flip-fraction", c.sim.initial_flip_fraction, sim_flip);
    if (sim->count("--mode"))
      c.mode = sim_mode == "binary" ? hmnem::DataMode::binary : hmnem::DataMode::probability;
    apply(sim, "--out", c.out_dir, sim_out);
    hmnem::cmd_simulate(c);
    std::printf("wrote %s\n", (c.out_dir + "/manifest.json").c_str());
    return 0;
  }
  if (inf->parsed()) {
    hmnem::InferCmd c;
    hmnem::from_json_infer(config_or_empty(inf, config_path), c);
    apply(inf, "--data", c.data_path, inf_data);
    apply(inf, "--attachments", c.attachments_path, inf_att);
    apply(inf, "--mode", c.mode, inf_mode);
    apply(inf, "--chains", c.chains, inf_chains);
    apply(inf, "--threads", c.threads, inf_threads);
    apply(inf, "--iterations", c.sampler.iterations, inf_iter);
    apply(inf, "--burnin", c.sampler.burn_in, inf_burn);
    apply(inf, "--sigma", c.sampler.sigma, inf_sigma);
    apply(inf, "--seed", c.sampler.seed, inf_seed);
    if (inf->count("--init")) {
      c.sampler.init = inf_init == "greedy_nem"
                           ? hmnem::InitMode::greedy_nem
                           : (inf_init == "empty" ? hmnem::InitMode::empty
                                                  : hmnem::InitMode::given);
    }
    apply(inf, "--init-networks", c.init_networks_path, inf_initnets);
    apply(inf, "--lambda-init", c.sampler.lambda_init, inf_lambda0);
    if (inf->count("--fix-lambda")) c.sampler.fix_lambda = inf_fix;
    apply(inf, "--snapshot-interval", c.sampler.snapshot_interval, inf_snap);
    apply(inf, "--cutoff", c.cutoff, inf_cutoff);
    apply(inf, "--out", c.out_dir, inf_out);
    hmnem::cmd_infer(c);
    std::printf("wrote %s\n", (c.out_dir + "/manifest.json").c_str());
    return 0;
  }
  if (dia->parsed()) {
    hmnem::DiagnoseCmd c;
    hmnem::from_json_diagnose(config_or_empty(dia, config_path), c);
    if (dia->count("traces")) c.trace_paths = dia_traces;
    apply(dia, "--window-fraction", c.window_fraction, dia_window);
    apply(dia, "--hpd-coverage", c.hpd_coverage, dia_cov);
    apply(dia, "--out", c.out_dir, dia_out);
    hmnem::cmd_diagnose(c);
    std::printf("wrote %s\n", (c.out_dir + "/manifest.json").c_str());
    return 0;
  }
  if (sum->parsed()) {
    hmnem::SummarizeCmd c;
    hmnem::from_json_summarize(config_or_empty(sum, config_path), c);
    apply(sum, "--expected", c.expected_path, sum_expected);
    apply(sum, "--truth", c.truth_path, sum_truth);
    apply(sum, "--cutoff", c.cutoff, sum_cutoff);
    apply(sum, "--out", c.out_dir, sum_out);
    hmnem::cmd_summarize(c);
    std::printf("wrote %s\n", (c.out_dir + "/manifest.json").c_str());
    return 0;
  }
  if (rer->parsed()) {
    const json m = hmnem::rerun_manifest(rer_manifest, rer_out);
    std::printf("reran %s\n", m.at("command").get<std::string>().c_str());
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hmnem::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const hmnem::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
