#pragma once

// The three comparison algorithms: tabular Q-learning with optimistic
// initialization, the no-argmax imitation baseline, and the
// nearest-neighbor variant that swaps the sequence model for exact buffer
// matching.

#include <string>
#include <unordered_map>
#include <vector>

#include "icpi/agent.hpp"

namespace icpi {

// Q(s, a) keyed on the textual state encoding (which discretizes point-mass
// at the two-decimal observation). Unvisited entries read optimistically.
class QTable {
 public:
  QTable(int n_actions, double initial_value = 1.0);

  double get(const std::string& state_key, int action) const;
  void set(const std::string& state_key, int action, double value);
  double max_value(const std::string& state_key) const;

 private:
  int n_actions_;
  double initial_value_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

// Undiscounted return above which a trajectory counts as successful.
// Defaults are the optimal undiscounted returns.
double default_success_threshold(EnvId env);

// Greedy tabular Q-learning, learning rate 1.0, optimistic init 1.0; the
// optimism is the only exploration mechanism.
RunLog tabular_q_train(EnvId env, const TrainConfig& config);

// Uniform-random behavior until 3 successes, thereafter the rollout-policy
// prompt mechanism over successful trajectories only. No argmax, no
// simulated rollouts.
RunLog no_argmax_train(EnvId env, Backend& backend, double success_threshold,
                       const TrainConfig& config);

// ICPI with the matching model standing in for the sequence model.
RunLog nearest_neighbor_train(EnvId env, const TrainConfig& config);

}  // namespace icpi
