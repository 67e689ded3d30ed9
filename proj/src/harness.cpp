#include "icpi/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace icpi {
namespace {

using nlohmann::json;

std::string run_stem(const ExperimentConfig& cfg, EnvId domain,
                     unsigned long long seed) {
  return to_string(domain) + "_" + to_string(cfg.algorithm) + "_seed" +
         std::to_string(seed);
}

RunLog run_one(const ExperimentConfig& cfg, EnvId domain, std::uint64_t seed,
               ReplayBuffer* buffer) {
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  double threshold = cfg.success_threshold >= 0.0
                         ? cfg.success_threshold
                         : default_success_threshold(domain);
  tc.success_threshold = threshold;
  switch (cfg.algorithm) {
    case Algorithm::icpi: {
      BackendPtr backend = make_backend(cfg, domain);
      return train(domain, *backend, tc, buffer);
    }
    case Algorithm::no_argmax: {
      BackendPtr backend = make_backend(cfg, domain);
      return no_argmax_train(domain, *backend, threshold, tc);
    }
    case Algorithm::tabular_q:
      return tabular_q_train(domain, tc);
    case Algorithm::nearest_neighbor:
      return nearest_neighbor_train(domain, tc);
  }
  throw std::invalid_argument("bad Algorithm");
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::icpi: return "icpi";
    case Algorithm::no_argmax: return "no_argmax";
    case Algorithm::tabular_q: return "tabular_q";
    case Algorithm::nearest_neighbor: return "nearest_neighbor";
  }
  throw std::invalid_argument("bad Algorithm");
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::icpi, Algorithm::no_argmax,
                      Algorithm::tabular_q, Algorithm::nearest_neighbor}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm: " + name);
}

void ExperimentConfig::validate() const {
  if (domains.empty()) throw std::invalid_argument("no domains configured");
  if (seeds < 1) throw std::invalid_argument("seeds must be >= 1");
  train.validate();
  if (backend == BackendKind::remote && remote.endpoint.empty()) {
    throw std::invalid_argument(
        "remote backend requires an endpoint (config or ICPI_API_URL)");
  }
  if (backend == BackendKind::remote &&
      remote.endpoint.find("://") == std::string::npos) {
    throw std::invalid_argument("remote endpoint must be a full URL");
  }
}

ExperimentConfig parse_config_json(const std::string& json_text) {
  json j = json::parse(json_text);
  ExperimentConfig cfg;
  if (j.contains("domains")) {
    for (const auto& d : j.at("domains")) {
      cfg.domains.push_back(parse_env_id(d.get<std::string>()));
    }
  } else if (j.contains("domain")) {
    cfg.domains.push_back(parse_env_id(j.at("domain").get<std::string>()));
  }
  if (j.contains("algorithm")) {
    cfg.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  }
  if (j.contains("backend")) {
    std::string b = j.at("backend").get<std::string>();
    if (b == "oracle") cfg.backend = BackendKind::oracle;
    else if (b == "matching") cfg.backend = BackendKind::matching;
    else if (b == "remote") cfg.backend = BackendKind::remote;
    else throw std::invalid_argument("unknown backend: " + b);
  }
  if (j.contains("remote")) {
    const auto& r = j.at("remote");
    if (r.contains("endpoint")) cfg.remote.endpoint = r.at("endpoint");
    if (r.contains("model")) cfg.remote.model = r.at("model");
    if (r.contains("response_text_path")) {
      cfg.remote.response_text_path = r.at("response_text_path");
    }
    if (r.contains("max_retries")) cfg.remote.max_retries = r.at("max_retries");
  }
  cfg.remote.apply_env();  // credentials come from the environment
  if (j.contains("seeds")) cfg.seeds = j.at("seeds");
  if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed");
  if (j.contains("episodes")) cfg.train.episodes = j.at("episodes");
  if (j.contains("gamma")) cfg.train.gamma = j.at("gamma");
  if (j.contains("recency_cutoff")) cfg.train.recency_cutoff = j.at("recency_cutoff");
  if (j.contains("rollout_horizon")) cfg.train.rollout_horizon = j.at("rollout_horizon");
  if (j.contains("hints")) cfg.train.hints = j.at("hints");
  if (j.contains("balance")) cfg.train.balance = j.at("balance");
  if (j.contains("constraints")) cfg.train.constraints = j.at("constraints");
  if (j.contains("successful_only_policy_prompts")) {
    cfg.train.successful_only_policy_prompts =
        j.at("successful_only_policy_prompts");
  }
  if (j.contains("token_budget")) cfg.train.token_budget = j.at("token_budget");
  if (j.contains("temperature")) cfg.train.temperature = j.at("temperature");
  if (j.contains("success_threshold")) cfg.success_threshold = j.at("success_threshold");
  if (j.contains("output_dir")) {
    cfg.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("maze")) {
    const auto& m = j.at("maze");
    MazeLayout layout;
    if (m.contains("width")) layout.width = m.at("width");
    if (m.contains("height")) layout.height = m.at("height");
    if (m.contains("start")) layout.start = {m.at("start").at(0), m.at("start").at(1)};
    if (m.contains("goal")) layout.goal = {m.at("goal").at(0), m.at("goal").at(1)};
    if (m.contains("obstacles")) {
      layout.obstacles.clear();
      for (const auto& o : m.at("obstacles")) {
        layout.obstacles.push_back({o.at(0), o.at(1)});
      }
    }
    cfg.train.maze = layout;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open config: " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_json(text.str());
}

BackendPtr make_backend(const ExperimentConfig& cfg, EnvId domain) {
  switch (cfg.backend) {
    case BackendKind::oracle:
      return std::make_unique<OracleBackend>(domain, cfg.train.hints,
                                             cfg.train.maze);
    case BackendKind::remote:
      return std::make_unique<RemoteBackend>(cfg.remote);
    case BackendKind::matching:
      throw std::invalid_argument(
          "the matching backend is selected via the nearest_neighbor "
          "algorithm");
  }
  throw std::invalid_argument("bad BackendKind");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool resume) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  ExperimentResult result;

  for (EnvId domain : cfg.domains) {
    std::vector<RunLog> logs;
    for (int k = 0; k < cfg.seeds; ++k) {
      std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(k);
      SeedOutcome outcome;
      outcome.domain = domain;
      outcome.seed = seed;
      std::string stem = run_stem(cfg, domain, seed);
      outcome.runlog_file = cfg.output_dir / (stem + ".csv");
      outcome.buffer_file = cfg.output_dir / (stem + ".buffer.txt");
      try {
        ReplayBuffer buffer;
        RunLog prior;
        bool have_prior = false;
        if (resume && std::filesystem::exists(outcome.buffer_file) &&
            std::filesystem::exists(outcome.runlog_file)) {
          std::ifstream bin(outcome.buffer_file);
          buffer = load_buffer(domain, bin);
          std::ifstream rin(outcome.runlog_file);
          prior = load_runlog_csv(rin);
          have_prior = true;
        }
        ExperimentConfig remaining = cfg;
        remaining.train.episodes =
            cfg.train.episodes - static_cast<int>(prior.episodes.size());
        if (remaining.train.episodes < 0) remaining.train.episodes = 0;
        RunLog log = run_one(remaining, domain, seed,
                             cfg.algorithm == Algorithm::icpi ? &buffer : nullptr);
        if (have_prior) {
          prior.episodes.insert(prior.episodes.end(), log.episodes.begin(),
                                log.episodes.end());
          prior.aborted = log.aborted;
          prior.abort_reason = log.abort_reason;
          log = std::move(prior);
          log.domain = to_string(domain);
          log.algorithm = to_string(cfg.algorithm);
          log.seed = seed;
        }
        {
          std::ofstream out(outcome.runlog_file);
          save_runlog_csv(log, out);
        }
        if (cfg.algorithm == Algorithm::icpi) {
          std::ofstream out(outcome.buffer_file);
          save_buffer(buffer, domain, out);
        }
        if (log.aborted) {
          outcome.failed = true;
          outcome.error = log.abort_reason;
        }
        logs.push_back(std::move(log));
      } catch (const std::exception& e) {
        outcome.failed = true;
        outcome.error = e.what();
      }
      result.outcomes.push_back(std::move(outcome));
    }
    if (!logs.empty()) {
      auto points = aggregate_regret(logs);
      std::filesystem::path file =
          cfg.output_dir /
          (to_string(domain) + "_" + to_string(cfg.algorithm) + "_aggregate.csv");
      std::ofstream out(file);
      save_aggregate_csv(points, out);
      result.aggregate_files.push_back(std::move(file));
    }
  }
  return result;
}

std::vector<RegretPoint> aggregate_regret(const std::vector<RunLog>& logs) {
  // expand each run into per-timestep regret, carrying the episode's regret
  // across its steps
  std::vector<std::vector<double>> curves;
  std::size_t max_len = 0;
  for (const auto& log : logs) {
    std::vector<double> curve;
    for (const auto& e : log.episodes) {
      for (int s = 0; s < e.steps; ++s) curve.push_back(e.normalized_regret);
    }
    max_len = std::max(max_len, curve.size());
    curves.push_back(std::move(curve));
  }
  std::vector<RegretPoint> points;
  for (std::size_t t = 0; t < max_len; ++t) {
    RegretPoint p;
    p.timestep = static_cast<int>(t);
    std::vector<double> values;
    for (const auto& curve : curves) {
      if (curve.empty()) continue;
      values.push_back(t < curve.size() ? curve[t] : curve.back());
    }
    p.n_seeds = static_cast<int>(values.size());
    if (values.empty()) continue;
    double sum = 0.0;
    for (double v : values) sum += v;
    p.mean_regret = sum / values.size();
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - p.mean_regret) * (v - p.mean_regret);
      double sd = std::sqrt(ss / (values.size() - 1));
      p.stderr_regret = sd / std::sqrt(static_cast<double>(values.size()));
    }
    points.push_back(p);
  }
  return points;
}

void save_aggregate_csv(const std::vector<RegretPoint>& points,
                        std::ostream& out) {
  out << "timestep,mean_regret,stderr_regret,n_seeds\n";
  out << std::setprecision(17);
  for (const auto& p : points) {
    out << p.timestep << ',' << p.mean_regret << ',' << p.stderr_regret << ','
        << p.n_seeds << '\n';
  }
}

}  // namespace icpi
