#include "icpi/replay.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "icpi/textcodec.hpp"

namespace icpi {
namespace {

// Upsample every class to the size of the largest by duplicating randomly
// chosen members (with replacement).
std::vector<Transition> balance_classes(
    std::vector<std::vector<Transition>> classes, Rng& rng) {
  std::size_t target = 0;
  for (const auto& cls : classes) target = std::max(target, cls.size());
  std::vector<Transition> out;
  for (auto& cls : classes) {
    if (cls.empty()) continue;
    std::vector<Transition> grown = cls;
    while (grown.size() < target) {
      std::uniform_int_distribution<std::size_t> pick(0, cls.size() - 1);
      grown.push_back(cls[pick(rng)]);
    }
    out.insert(out.end(), grown.begin(), grown.end());
  }
  return out;
}

std::vector<Transition> draw_pool(const ReplayBuffer& buffer, Rng& rng,
                                  int max_pool,
                                  const std::function<bool(const Transition&)>& keep) {
  std::vector<Transition> pool;
  for (const auto& traj : buffer.trajectories()) {
    for (const auto& t : traj.transitions) {
      if (keep(t)) pool.push_back(t);
    }
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  if (static_cast<int>(pool.size()) > max_pool) pool.resize(max_pool);
  return pool;
}

}  // namespace

Trajectory make_trajectory(std::vector<Transition> transitions) {
  Trajectory traj;
  traj.transitions = std::move(transitions);
  for (const auto& t : traj.transitions) traj.undiscounted_return += t.reward;
  return traj;
}

void ReplayBuffer::append(Trajectory trajectory) {
  if (trajectory.transitions.empty()) {
    throw std::invalid_argument("cannot append an empty trajectory");
  }
  if (!trajectory.transitions.back().done) {
    throw std::invalid_argument("cannot append an incomplete trajectory");
  }
  trajectories_.push_back(std::move(trajectory));
}

std::size_t ReplayBuffer::transition_count() const {
  std::size_t n = 0;
  for (const auto& traj : trajectories_) n += traj.transitions.size();
  return n;
}

std::vector<const Transition*> ReplayBuffer::all_transitions() const {
  std::vector<const Transition*> out;
  for (const auto& traj : trajectories_) {
    for (const auto& t : traj.transitions) out.push_back(&t);
  }
  return out;
}

std::vector<Transition> sample_termination_prompt(const ReplayBuffer& buffer,
                                                  ActionId action, Rng& rng,
                                                  bool balance, bool constrain,
                                                  int max_pool) {
  auto pool = draw_pool(buffer, rng, max_pool, [&](const Transition& t) {
    return !constrain || t.action == action;
  });
  if (!balance) return pool;
  std::vector<Transition> terminal, ongoing;
  for (auto& t : pool) (t.done ? terminal : ongoing).push_back(t);
  auto out = balance_classes({std::move(terminal), std::move(ongoing)}, rng);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<Transition> sample_reward_prompt(const ReplayBuffer& buffer,
                                             ActionId action,
                                             bool predicted_done, Rng& rng,
                                             bool balance, bool constrain,
                                             int max_pool) {
  auto pool = draw_pool(buffer, rng, max_pool, [&](const Transition& t) {
    return !constrain || (t.action == action && t.done == predicted_done);
  });
  if (!balance) return pool;
  std::vector<std::vector<Transition>> by_reward;
  for (auto& t : pool) {
    auto it = std::find_if(by_reward.begin(), by_reward.end(),
                           [&](const auto& cls) {
                             return cls.front().reward == t.reward;
                           });
    if (it == by_reward.end()) {
      by_reward.push_back({t});
    } else {
      it->push_back(t);
    }
  }
  auto out = balance_classes(std::move(by_reward), rng);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<Transition> sample_obs_prompt(const ReplayBuffer& buffer,
                                          ActionId action, Rng& rng,
                                          bool constrain, int max_pool) {
  return draw_pool(buffer, rng, max_pool, [&](const Transition& t) {
    return !constrain || (t.action == action && !t.done);
  });
}

std::vector<std::vector<Transition>> sample_policy_prompt(
    const ReplayBuffer& buffer, int recency_cutoff, Rng& rng, int max_blocks,
    bool successful_only, double success_threshold) {
  std::vector<const Trajectory*> eligible;
  for (auto it = buffer.trajectories().rbegin();
       it != buffer.trajectories().rend() &&
       static_cast<int>(eligible.size()) < recency_cutoff;
       ++it) {
    if (successful_only && it->undiscounted_return < success_threshold) continue;
    eligible.push_back(&*it);
  }
  std::vector<std::vector<Transition>> blocks;
  if (eligible.empty()) return blocks;
  for (int b = 0; b < max_blocks; ++b) {
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    const Trajectory& traj = *eligible[pick(rng)];
    std::size_t len = traj.transitions.size();
    std::uniform_int_distribution<std::size_t> bound(0, len - 1);
    std::size_t start = bound(rng);
    std::size_t end = bound(rng);
    if (start > end) std::swap(start, end);
    blocks.emplace_back(traj.transitions.begin() + start,
                        traj.transitions.begin() + end + 1);
  }
  return blocks;
}

void save_buffer(const ReplayBuffer& buffer, EnvId env, std::ostream& out) {
  for (const auto& traj : buffer.trajectories()) {
    for (const auto& t : traj.transitions) {
      out << t.episode_index << '\t' << t.step_index << '\t'
          << state_line(env, t.obs) << '\t' << t.action.index << '\t'
          << t.reward << '\t' << (t.done ? 1 : 0) << '\t'
          << state_line(env, t.next_obs) << '\n';
    }
  }
}

ReplayBuffer load_buffer(EnvId env, std::istream& in) {
  ReplayBuffer buffer;
  std::vector<Transition> current;
  int current_episode = -1;
  std::string line;
  auto flush = [&]() {
    if (!current.empty()) buffer.append(make_trajectory(std::move(current)));
    current.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string episode, step, obs, action, reward, done, next_obs;
    if (!std::getline(fields, episode, '\t') || !std::getline(fields, step, '\t') ||
        !std::getline(fields, obs, '\t') || !std::getline(fields, action, '\t') ||
        !std::getline(fields, reward, '\t') || !std::getline(fields, done, '\t') ||
        !std::getline(fields, next_obs, '\t')) {
      throw std::runtime_error("malformed buffer line: " + line);
    }
    Transition t;
    t.episode_index = std::stoi(episode);
    t.step_index = std::stoi(step);
    auto parsed_obs = parse_state(env, obs);
    auto parsed_next = parse_state(env, next_obs);
    if (!parsed_obs || !parsed_next) {
      throw std::runtime_error("unparseable state in buffer line: " + line);
    }
    t.obs = *parsed_obs;
    t.next_obs = *parsed_next;
    t.action = ActionId{std::stoi(action)};
    t.reward = std::stoi(reward);
    t.done = done == "1";
    if (t.episode_index != current_episode) {
      flush();
      current_episode = t.episode_index;
    }
    current.push_back(std::move(t));
  }
  flush();
  return buffer;
}

}  // namespace icpi
