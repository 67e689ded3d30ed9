#pragma once

// The training loop and the rollout-based Q estimation it argmaxes over:
// simulate a trajectory with the model backend (alternately predicting
// termination, reward, next state, and next action), discount-sum the
// rewards, act greedily with random tie-breaking.

#include <cstdint>
#include <utility>
#include <vector>

#include "icpi/env.hpp"
#include "icpi/models.hpp"
#include "icpi/replay.hpp"
#include "icpi/runlog.hpp"

namespace icpi {

struct TrainConfig {
  double gamma = 0.8;
  int recency_cutoff = 8;
  int rollout_horizon = 8;  // matches the environments' time limit
  int episodes = 100;
  bool hints = true;
  bool balance = true;
  bool constraints = true;
  // restrict policy prompts to successful trajectories
  bool successful_only_policy_prompts = false;
  double success_threshold = 1.0;
  int max_pool = 32;
  // blocks are drawn until this cap; the prompt token budget does the
  // real limiting by dropping leading blocks at render time
  int max_policy_blocks = 64;
  int token_budget = kDefaultTokenBudget;
  double temperature = 0.1;
  // extra completion attempts on an unparseable answer before the
  // pessimistic terminate-with-zero fallback kicks in
  int parse_retries = 0;
  std::uint64_t seed = 0;
  MazeLayout maze{};

  void validate() const;  // throws std::invalid_argument
};

// Rollout-policy prompt assembly: subsequence blocks of (state, action)
// pairs with dynamics annotations, query ending at the current state text.
// Shared with the no-argmax baseline.
CompletionRequest make_policy_request(
    EnvId env, const std::vector<std::vector<Transition>>& blocks,
    const std::string& state_text, const TrainConfig& config);

struct RolloutStep {
  std::string state_text;  // raw model text, carried verbatim between steps
  ActionId action;
  int reward = 0;
  bool done = false;
};

struct RolloutTrace {
  std::vector<RolloutStep> steps;
  double q_value = 0.0;  // sum_k gamma^{k-1} r^k
  long tokens_used = 0;
};

// One simulated rollout starting with the candidate action; subsequent
// actions come from the rollout policy. Empty buffer or an exemplar-less
// prompt ends the rollout where it stands (an empty trace has q = 0).
RolloutTrace q_estimate(EnvId env, const EnvState& state, ActionId action,
                        const ReplayBuffer& buffer, Backend& backend,
                        const TrainConfig& config, Rng& rng);

struct ActionChoice {
  ActionId action;
  std::vector<RolloutTrace> traces;  // one per action, in action-space order
};

// Greedy over per-action rollout Q values; exact ties broken uniformly at
// random (with an empty buffer every q is 0, so behavior starts random).
ActionChoice select_action(EnvId env, const EnvState& state,
                           const ReplayBuffer& buffer, Backend& backend,
                           const TrainConfig& config, Rng& rng);

// Full training run. An existing buffer may be passed in to resume a run;
// episode indices continue from what it contains.
RunLog train(EnvId env, Backend& backend, const TrainConfig& config,
             ReplayBuffer* buffer = nullptr);

}  // namespace icpi
