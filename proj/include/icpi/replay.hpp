#pragma once

// Replay buffer (the full, append-only history of behavior) and the four
// prompt samplers with their constraint and balancing rules.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "icpi/env.hpp"

namespace icpi {

struct Transition {
  EnvState obs;
  ActionId action;
  int reward = 0;
  bool done = false;
  EnvState next_obs;
  int episode_index = 0;
  int step_index = 0;
};

struct Trajectory {
  std::vector<Transition> transitions;
  double undiscounted_return = 0.0;  // cached sum of rewards
};

Trajectory make_trajectory(std::vector<Transition> transitions);

class ReplayBuffer {
 public:
  // trajectory must be complete: non-empty, last transition done=true
  void append(Trajectory trajectory);

  std::size_t size() const { return trajectories_.size(); }
  bool empty() const { return trajectories_.empty(); }
  const Trajectory& trajectory(std::size_t i) const { return trajectories_[i]; }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }

  std::size_t transition_count() const;
  std::vector<const Transition*> all_transitions() const;

 private:
  std::vector<Trajectory> trajectories_;
};

// Exemplars for termination prediction. constrain: action matches. balance:
// equal counts of terminal and non-terminal, minority duplicated with
// replacement. Output shuffled. Empty result means no usable exemplars.
std::vector<Transition> sample_termination_prompt(const ReplayBuffer& buffer,
                                                  ActionId action, Rng& rng,
                                                  bool balance, bool constrain,
                                                  int max_pool = 32);

// Exemplars for reward prediction. constrain: action matches AND
// done == predicted_done. balance: equal counts per distinct reward value.
std::vector<Transition> sample_reward_prompt(const ReplayBuffer& buffer,
                                             ActionId action,
                                             bool predicted_done, Rng& rng,
                                             bool balance, bool constrain,
                                             int max_pool = 32);

// Exemplars for next-state prediction. constrain: action matches AND
// done == false. Never balanced.
std::vector<Transition> sample_obs_prompt(const ReplayBuffer& buffer,
                                          ActionId action, Rng& rng,
                                          bool constrain, int max_pool = 32);

// Rollout-policy exemplars: contiguous subsequences with uniformly random
// start/end, drawn from the c most recent trajectories (optionally only
// those with undiscounted return >= success_threshold). Token-budget
// clipping happens at prompt-assembly time.
std::vector<std::vector<Transition>> sample_policy_prompt(
    const ReplayBuffer& buffer, int recency_cutoff, Rng& rng,
    int max_blocks = 16, bool successful_only = false,
    double success_threshold = 1.0);

// Line-delimited persistence: episode, step, obs text, action index, reward,
// done, next-obs text (tab-separated). Text fields use the hint-free state
// encoding.
void save_buffer(const ReplayBuffer& buffer, EnvId env, std::ostream& out);
ReplayBuffer load_buffer(EnvId env, std::istream& in);

}  // namespace icpi
