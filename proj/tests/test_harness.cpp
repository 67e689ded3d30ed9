#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "icpi/harness.hpp"

using namespace icpi;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunLog log_with(std::vector<std::pair<int, double>> steps_and_regret) {
  RunLog log;
  log.domain = "chain";
  log.algorithm = "icpi";
  int ep = 0;
  for (auto [steps, regret] : steps_and_regret) {
    EpisodeRecord rec;
    rec.episode = ep++;
    rec.steps = steps;
    rec.normalized_regret = regret;
    log.episodes.push_back(rec);
  }
  return log;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("icpi_harness_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("regret normalization worked examples") {
  // goal two moves away, gamma 0.8: V* = 0.8^2 = 0.64; achieving 0.512
  // (three moves) leaves regret (0.64 - 0.512)/0.64 = 0.2
  CHECK(normalized_regret(0.512, 0.64) == doctest::Approx(0.2));
  CHECK(normalized_regret(0.64, 0.64) == doctest::Approx(0.0));
  CHECK(normalized_regret(0.0, 0.64) == doctest::Approx(1.0));
  // overachieving or a zero-valued start state clamps to zero
  CHECK(normalized_regret(0.9, 0.64) == doctest::Approx(0.0));
  CHECK(normalized_regret(0.0, 0.0) == doctest::Approx(0.0));
  CHECK(normalized_regret(-1.0, 0.64) == doctest::Approx(1.0));
}

TEST_CASE("runlog csv round-trips") {
  RunLog log = log_with({{3, 0.5}, {2, 0.0}});
  log.seed = 7;
  log.episodes[0].undiscounted_return = 1.0;
  log.episodes[0].discounted_return = 0.64;
  log.episodes[0].optimal_value = 0.8;
  log.episodes[0].tokens_used = 1234;
  std::stringstream io;
  save_runlog_csv(log, io);
  RunLog back = load_runlog_csv(io);
  CHECK(back.domain == "chain");
  CHECK(back.algorithm == "icpi");
  CHECK(back.seed == 7);
  REQUIRE(back.episodes.size() == 2);
  CHECK(back.episodes[0].steps == 3);
  CHECK(back.episodes[0].discounted_return == doctest::Approx(0.64));
  CHECK(back.episodes[0].tokens_used == 1234);
  CHECK(back.episodes[1].normalized_regret == doctest::Approx(0.0));
}

TEST_CASE("aggregation expands episodes into per-timestep step functions") {
  // seed A: 2 steps at regret 1.0 then 1 step at 0.0
  // seed B: 1 step at regret 0.5 then done (carried forward)
  std::vector<RunLog> logs = {log_with({{2, 1.0}, {1, 0.0}}),
                              log_with({{1, 0.5}})};
  auto points = aggregate_regret(logs);
  REQUIRE(points.size() == 3);
  CHECK(points[0].timestep == 0);
  CHECK(points[0].mean_regret == doctest::Approx((1.0 + 0.5) / 2));
  CHECK(points[1].mean_regret == doctest::Approx((1.0 + 0.5) / 2));
  CHECK(points[2].mean_regret == doctest::Approx((0.0 + 0.5) / 2));
  CHECK(points[0].n_seeds == 2);
}

TEST_CASE("aggregate stderr is the sample sd over seeds divided by sqrt(n)") {
  std::vector<RunLog> logs = {log_with({{1, 0.2}}), log_with({{1, 0.4}}),
                              log_with({{1, 0.9}})};
  auto points = aggregate_regret(logs);
  REQUIRE(points.size() == 1);
  double mean = (0.2 + 0.4 + 0.9) / 3;
  double ss = (0.2 - mean) * (0.2 - mean) + (0.4 - mean) * (0.4 - mean) +
              (0.9 - mean) * (0.9 - mean);
  double expected = std::sqrt(ss / 2) / std::sqrt(3.0);
  CHECK(points[0].mean_regret == doctest::Approx(mean));
  CHECK(points[0].stderr_regret == doctest::Approx(expected));
  // a single seed has no spread estimate
  auto single = aggregate_regret({log_with({{1, 0.3}})});
  CHECK(single[0].stderr_regret == doctest::Approx(0.0));
}

TEST_CASE("config json covers domains, algorithm, ablations, and maze shape") {
  ExperimentConfig cfg = parse_config_json(R"({
    "domains": ["chain", "maze"],
    "algorithm": "tabular_q",
    "backend": "oracle",
    "seeds": 2,
    "base_seed": 10,
    "episodes": 25,
    "gamma": 0.9,
    "recency_cutoff": 16,
    "hints": false,
    "balance": false,
    "constraints": false,
    "token_budget": 2000,
    "output_dir": "/tmp/nowhere",
    "maze": {"width": 4, "height": 4, "start": [0, 0], "goal": [3, 3],
             "obstacles": [[1, 1], [2, 2]]}
  })");
  REQUIRE(cfg.domains.size() == 2);
  CHECK(cfg.domains[0] == EnvId::chain);
  CHECK(cfg.domains[1] == EnvId::maze);
  CHECK(cfg.algorithm == Algorithm::tabular_q);
  CHECK(cfg.seeds == 2);
  CHECK(cfg.base_seed == 10);
  CHECK(cfg.train.episodes == 25);
  CHECK(cfg.train.gamma == doctest::Approx(0.9));
  CHECK(cfg.train.recency_cutoff == 16);
  CHECK_FALSE(cfg.train.hints);
  CHECK_FALSE(cfg.train.balance);
  CHECK_FALSE(cfg.train.constraints);
  CHECK(cfg.train.token_budget == 2000);
  CHECK(cfg.output_dir == fs::path("/tmp/nowhere"));
  CHECK(cfg.train.maze.width == 4);
  CHECK(cfg.train.maze.goal == Coord{3, 3});
  REQUIRE(cfg.train.maze.obstacles.size() == 2);
  CHECK(cfg.train.maze.blocked({2, 2}));
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config accepts the single-domain shorthand") {
  ExperimentConfig cfg = parse_config_json(R"({"domain": "point-mass"})");
  REQUIRE(cfg.domains.size() == 1);
  CHECK(cfg.domains[0] == EnvId::point_mass);
  CHECK(cfg.algorithm == Algorithm::icpi);
  CHECK(cfg.seeds == 4);
}

TEST_CASE("config validation rejects broken setups") {
  ExperimentConfig empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

  ExperimentConfig no_seeds = parse_config_json(R"({"domain": "chain"})");
  no_seeds.seeds = 0;
  CHECK_THROWS_AS(no_seeds.validate(), std::invalid_argument);

  CHECK_THROWS_AS(parse_config_json(R"({"domain": "not-a-domain"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({"domain": "chain", "algorithm": "x"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({"domain": "chain", "backend": "x"})"),
                  std::invalid_argument);

  ExperimentConfig remote = parse_config_json(
      R"({"domain": "chain", "backend": "remote"})");
  if (remote.remote.endpoint.empty()) {
    CHECK_THROWS_AS(remote.validate(), std::invalid_argument);
  }
  remote.remote.endpoint = "nohost";
  CHECK_THROWS_AS(remote.validate(), std::invalid_argument);
  remote.remote.endpoint = "http://host/v1";
  CHECK_NOTHROW(remote.validate());
}

TEST_CASE("matching is not a standalone backend") {
  ExperimentConfig cfg = parse_config_json(
      R"({"domain": "chain", "backend": "matching"})");
  CHECK_THROWS_AS(make_backend(cfg, EnvId::chain), std::invalid_argument);
}

TEST_CASE("an experiment writes one runlog per seed plus an aggregate") {
  TempDir tmp;
  ExperimentConfig cfg = parse_config_json(R"({
    "domains": ["chain"], "algorithm": "icpi", "seeds": 2, "episodes": 5
  })");
  cfg.output_dir = tmp.path;
  ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.outcomes.size() == 2);
  for (const auto& o : result.outcomes) {
    CHECK_FALSE(o.failed);
    CHECK(fs::exists(o.runlog_file));
    CHECK(fs::exists(o.buffer_file));  // icpi persists its buffer
  }
  REQUIRE(result.aggregate_files.size() == 1);
  CHECK(fs::exists(result.aggregate_files[0]));
  std::string agg = slurp(result.aggregate_files[0]);
  CHECK(agg.rfind("timestep,mean_regret,stderr_regret,n_seeds\n", 0) == 0);
  // two runlogs, one buffer per seed, one aggregate
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path)) ++files;
  CHECK(files == 5);
}

TEST_CASE("baseline experiments do not persist buffers") {
  TempDir tmp;
  ExperimentConfig cfg = parse_config_json(R"({
    "domains": ["chain"], "algorithm": "tabular_q", "seeds": 1, "episodes": 5
  })");
  cfg.output_dir = tmp.path;
  ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.outcomes.size() == 1);
  CHECK(fs::exists(result.outcomes[0].runlog_file));
  CHECK_FALSE(fs::exists(result.outcomes[0].buffer_file));
}

TEST_CASE("rerunning an experiment reproduces byte-identical outputs") {
  TempDir a, b;
  ExperimentConfig cfg = parse_config_json(R"({
    "domains": ["maze"], "algorithm": "icpi", "seeds": 2, "episodes": 6
  })");
  cfg.output_dir = a.path;
  run_experiment(cfg);
  cfg.output_dir = b.path;
  run_experiment(cfg);
  for (const char* name :
       {"maze_icpi_seed0.buffer.txt", "maze_icpi_seed1.buffer.txt",
        "maze_icpi_aggregate.csv"}) {
    CHECK(slurp(a.path / name) == slurp(b.path / name));
  }
  // runlog csvs differ only in wall-clock fields; compare everything else
  for (const char* name : {"maze_icpi_seed0.csv", "maze_icpi_seed1.csv"}) {
    std::ifstream ia(a.path / name), ib(b.path / name);
    RunLog la = load_runlog_csv(ia), lb = load_runlog_csv(ib);
    REQUIRE(la.episodes.size() == lb.episodes.size());
    for (std::size_t i = 0; i < la.episodes.size(); ++i) {
      CHECK(la.episodes[i].discounted_return ==
            lb.episodes[i].discounted_return);
      CHECK(la.episodes[i].steps == lb.episodes[i].steps);
    }
  }
}

TEST_CASE("resume completes an interrupted run without restarting it") {
  TempDir tmp;
  ExperimentConfig cfg = parse_config_json(R"({
    "domains": ["chain"], "algorithm": "icpi", "seeds": 1, "episodes": 4
  })");
  cfg.output_dir = tmp.path;
  run_experiment(cfg);

  // the same run asked for 10 episodes resumes with the 4 already logged
  cfg.train.episodes = 10;
  ExperimentResult result = run_experiment(cfg, /*resume=*/true);
  REQUIRE(result.outcomes.size() == 1);
  CHECK_FALSE(result.outcomes[0].failed);
  std::ifstream in(result.outcomes[0].runlog_file);
  RunLog log = load_runlog_csv(in);
  REQUIRE(log.episodes.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(log.episodes[i].episode == i);
  std::ifstream bin(result.outcomes[0].buffer_file);
  ReplayBuffer buffer = load_buffer(EnvId::chain, bin);
  CHECK(buffer.size() == 10);

  // resuming a finished run is a no-op
  ExperimentResult again = run_experiment(cfg, /*resume=*/true);
  std::ifstream in2(again.outcomes[0].runlog_file);
  CHECK(load_runlog_csv(in2).episodes.size() == 10);
}
