#pragma once

// Per-episode run records, shared by the ICPI loop and all baselines so the
// harness can aggregate them uniformly.

#include <iosfwd>
#include <string>
#include <vector>

namespace icpi {

struct EpisodeRecord {
  int episode = 0;
  int steps = 0;
  double undiscounted_return = 0.0;
  double discounted_return = 0.0;
  double optimal_value = 0.0;      // V* at the episode's start state
  double normalized_regret = 0.0;  // (V* - G)/V*, clamped to [0, 1]
  double wall_clock_s = 0.0;
  long tokens_used = 0;
};

struct RunLog {
  std::string domain;
  std::string algorithm;
  unsigned long long seed = 0;
  std::vector<EpisodeRecord> episodes;
  bool aborted = false;  // backend became unavailable mid-run
  std::string abort_reason;
};

// (V* - G)/V* clamped to [0, 1]; V* = 0 is defined as regret 0.
double normalized_regret(double episode_return_discounted,
                         double start_state_optimal);

void save_runlog_csv(const RunLog& log, std::ostream& out);
RunLog load_runlog_csv(std::istream& in);

}  // namespace icpi
