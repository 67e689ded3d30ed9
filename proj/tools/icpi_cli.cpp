// Command-line entry point: run experiments, resume interrupted ones,
// aggregate per-seed run logs into plot-ready CSVs, and validate configs.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "icpi/harness.hpp"

namespace {

struct CliOverrides {
  std::string config_file;
  std::string domain;
  std::string algorithm;
  std::string backend;
  int seeds = -1;
  int episodes = -1;
  int recency_cutoff = -1;
  bool no_hints = false;
  bool no_balance = false;
  bool no_constraints = false;
  std::string output_dir;
  bool debug = false;
};

icpi::ExperimentConfig build_config(const CliOverrides& o) {
  icpi::ExperimentConfig cfg;
  if (!o.config_file.empty()) cfg = icpi::load_config(o.config_file);
  if (!o.domain.empty()) cfg.domains = {icpi::parse_env_id(o.domain)};
  if (!o.algorithm.empty()) cfg.algorithm = icpi::parse_algorithm(o.algorithm);
  if (!o.backend.empty()) {
    if (o.backend == "oracle") cfg.backend = icpi::BackendKind::oracle;
    else if (o.backend == "matching") cfg.backend = icpi::BackendKind::matching;
    else if (o.backend == "remote") cfg.backend = icpi::BackendKind::remote;
    else throw std::invalid_argument("unknown backend: " + o.backend);
  }
  if (o.seeds >= 0) cfg.seeds = o.seeds;
  if (o.episodes >= 0) cfg.train.episodes = o.episodes;
  if (o.recency_cutoff >= 0) cfg.train.recency_cutoff = o.recency_cutoff;
  if (o.no_hints) cfg.train.hints = false;
  if (o.no_balance) cfg.train.balance = false;
  if (o.no_constraints) cfg.train.constraints = false;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  cfg.remote.debug_log = o.debug;
  cfg.remote.apply_env();
  return cfg;
}

void add_common_flags(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("-c,--config", o.config_file, "experiment config (JSON)");
  cmd->add_option("--domain", o.domain, "single domain override");
  cmd->add_option("--algorithm", o.algorithm,
                  "icpi | no_argmax | tabular_q | nearest_neighbor");
  cmd->add_option("--backend", o.backend, "oracle | matching | remote");
  cmd->add_option("--seeds", o.seeds, "number of seeds");
  cmd->add_option("--episodes", o.episodes, "episodes per run");
  cmd->add_option("--recency-cutoff", o.recency_cutoff,
                  "policy-prompt recency cutoff (8, or 16 for the ablation)");
  cmd->add_flag("--no-hints", o.no_hints, "ablation: drop domain hints");
  cmd->add_flag("--no-balance", o.no_balance, "ablation: drop prompt balancing");
  cmd->add_flag("--no-constraints", o.no_constraints,
                "ablation: drop prompt constraints");
  cmd->add_option("-o,--output", o.output_dir, "output directory");
  cmd->add_flag("--debug", o.debug, "log remote request/response bodies");
}

int do_run(const CliOverrides& o, bool resume) {
  icpi::ExperimentConfig cfg = build_config(o);
  cfg.validate();
  icpi::ExperimentResult result = icpi::run_experiment(cfg, resume);
  int failures = 0;
  for (const auto& out : result.outcomes) {
    std::cout << icpi::to_string(out.domain) << " seed " << out.seed << ": ";
    if (out.failed) {
      ++failures;
      std::cout << "FAILED (" << out.error << ")\n";
    } else {
      std::cout << out.runlog_file.string() << "\n";
    }
  }
  for (const auto& file : result.aggregate_files) {
    std::cout << "aggregate: " << file.string() << "\n";
  }
  std::cout << result.outcomes.size() - failures << "/"
            << result.outcomes.size() << " runs completed\n";
  // per-seed failures are reported above but do not fail the invocation
  return 0;
}

int do_aggregate(const std::vector<std::string>& runlog_files,
                 const std::string& output) {
  std::vector<icpi::RunLog> logs;
  for (const auto& file : runlog_files) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open runlog: " + file);
    logs.push_back(icpi::load_runlog_csv(in));
  }
  auto points = icpi::aggregate_regret(logs);
  if (output.empty() || output == "-") {
    icpi::save_aggregate_csv(points, std::cout);
  } else {
    std::ofstream out(output);
    icpi::save_aggregate_csv(points, out);
    std::cout << "wrote " << output << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"in-context policy iteration experiment runner"};
  app.require_subcommand(1);

  CliOverrides run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment");
  add_common_flags(run_cmd, run_opts);

  CliOverrides resume_opts;
  CLI::App* resume_cmd =
      app.add_subcommand("resume", "resume from persisted buffers");
  add_common_flags(resume_cmd, resume_opts);

  std::vector<std::string> agg_inputs;
  std::string agg_output;
  CLI::App* agg_cmd =
      app.add_subcommand("aggregate", "aggregate per-seed runlog CSVs");
  agg_cmd->add_option("files", agg_inputs, "runlog CSV files")->required();
  agg_cmd->add_option("-o,--output", agg_output, "output CSV (default stdout)");

  CliOverrides validate_opts;
  CLI::App* validate_cmd =
      app.add_subcommand("validate-config", "check a config and exit");
  add_common_flags(validate_cmd, validate_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(run_opts, false);
    if (resume_cmd->parsed()) return do_run(resume_opts, true);
    if (agg_cmd->parsed()) return do_aggregate(agg_inputs, agg_output);
    if (validate_cmd->parsed()) {
      build_config(validate_opts).validate();
      std::cout << "config ok\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
