#pragma once

// Experiment runner: JSON configuration, multi-seed orchestration, regret
// aggregation, CSV emission, and resumption from persisted buffers.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "icpi/agent.hpp"
#include "icpi/baselines.hpp"
#include "icpi/models.hpp"

namespace icpi {

enum class Algorithm { icpi, no_argmax, tabular_q, nearest_neighbor };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

enum class BackendKind { oracle, matching, remote };

struct ExperimentConfig {
  std::vector<EnvId> domains;
  Algorithm algorithm = Algorithm::icpi;
  BackendKind backend = BackendKind::oracle;
  RemoteConfig remote;  // used only when backend == remote
  int seeds = 4;
  std::uint64_t base_seed = 0;  // seed k runs with base_seed + k
  TrainConfig train;
  double success_threshold = -1.0;  // < 0 means per-domain default
  std::filesystem::path output_dir = "runs";

  void validate() const;  // throws std::invalid_argument
};

ExperimentConfig load_config(const std::filesystem::path& file);
ExperimentConfig parse_config_json(const std::string& json_text);

struct SeedOutcome {
  EnvId domain;
  unsigned long long seed = 0;
  bool failed = false;
  std::string error;
  std::filesystem::path runlog_file;
  std::filesystem::path buffer_file;
};

struct ExperimentResult {
  std::vector<SeedOutcome> outcomes;
  std::vector<std::filesystem::path> aggregate_files;
};

// One run per (domain, seed); per-seed failures are recorded and the
// experiment continues. resume restarts unfinished runs from their
// persisted buffers instead of from scratch.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                bool resume = false);

struct RegretPoint {
  int timestep = 0;
  double mean_regret = 0.0;
  double stderr_regret = 0.0;  // sample sd / sqrt(#seeds)
  int n_seeds = 0;
};

// Per-episode regret expanded to a per-timestep step function (the episode's
// regret is carried across its steps, and the final value is carried forward
// past shorter runs), then averaged across seeds.
std::vector<RegretPoint> aggregate_regret(const std::vector<RunLog>& logs);

void save_aggregate_csv(const std::vector<RegretPoint>& points,
                        std::ostream& out);

BackendPtr make_backend(const ExperimentConfig& config, EnvId domain);

}  // namespace icpi
