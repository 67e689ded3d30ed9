#include "icpi/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "icpi/textcodec.hpp"

namespace icpi {
namespace {

ActionId random_action(EnvId env, Rng& rng) {
  return ActionId{std::uniform_int_distribution<int>(0, action_count(env) - 1)(rng)};
}

ActionId greedy_with_ties(const std::vector<double>& q, Rng& rng) {
  double best = *std::max_element(q.begin(), q.end());
  std::vector<int> tied;
  for (int a = 0; a < static_cast<int>(q.size()); ++a) {
    if (q[a] >= best - 1e-12) tied.push_back(a);
  }
  return ActionId{
      tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(rng)]};
}

EpisodeRecord finish_episode(EpisodeRecord rec, const TrainConfig& cfg,
                             std::chrono::steady_clock::time_point t0) {
  rec.normalized_regret =
      normalized_regret(rec.discounted_return, rec.optimal_value);
  rec.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  (void)cfg;
  return rec;
}

}  // namespace

QTable::QTable(int n_actions, double initial_value)
    : n_actions_(n_actions), initial_value_(initial_value) {}

double QTable::get(const std::string& state_key, int action) const {
  auto it = table_.find(state_key);
  return it == table_.end() ? initial_value_ : it->second[action];
}

void QTable::set(const std::string& state_key, int action, double value) {
  auto [it, inserted] =
      table_.try_emplace(state_key, std::vector<double>(n_actions_, initial_value_));
  it->second[action] = value;
}

double QTable::max_value(const std::string& state_key) const {
  auto it = table_.find(state_key);
  if (it == table_.end()) return initial_value_;
  return *std::max_element(it->second.begin(), it->second.end());
}

double default_success_threshold(EnvId env) {
  return env == EnvId::mini_invaders ? 2.0 : 1.0;
}

RunLog tabular_q_train(EnvId env, const TrainConfig& cfg) {
  cfg.validate();
  RunLog log;
  log.domain = to_string(env);
  log.algorithm = "tabular_q";
  log.seed = cfg.seed;

  Rng rng(cfg.seed);
  Environment world(env, cfg.maze);
  QTable q(action_count(env));

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    auto t0 = std::chrono::steady_clock::now();
    EpisodeRecord rec;
    rec.episode = ep;
    EnvState obs = world.reset(rng);
    rec.optimal_value = optimal_value(env, obs, cfg.gamma, cfg.maze);
    double discount = 1.0;
    while (!world.done()) {
      std::string key = state_line(env, world.state());
      std::vector<double> values(action_count(env));
      for (int a = 0; a < action_count(env); ++a) values[a] = q.get(key, a);
      ActionId action = greedy_with_ties(values, rng);
      StepResult r = world.step(action, rng);
      // learning rate 1.0: the backup replaces the old value outright
      std::string next_key = state_line(env, r.next_state);
      double target =
          r.reward + (r.done ? 0.0 : cfg.gamma * q.max_value(next_key));
      q.set(key, action.index, target);
      rec.undiscounted_return += r.reward;
      rec.discounted_return += discount * r.reward;
      discount *= cfg.gamma;
      ++rec.steps;
    }
    log.episodes.push_back(finish_episode(rec, cfg, t0));
  }
  return log;
}

RunLog no_argmax_train(EnvId env, Backend& backend, double success_threshold,
                       const TrainConfig& cfg) {
  cfg.validate();
  RunLog log;
  log.domain = to_string(env);
  log.algorithm = "no_argmax";
  log.seed = cfg.seed;

  Rng rng(cfg.seed);
  Environment world(env, cfg.maze);
  ReplayBuffer buffer;
  int successes = 0;

  TrainConfig policy_cfg = cfg;
  policy_cfg.successful_only_policy_prompts = true;
  policy_cfg.success_threshold = success_threshold;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    auto t0 = std::chrono::steady_clock::now();
    EpisodeRecord rec;
    rec.episode = ep;
    EnvState obs = world.reset(rng);
    rec.optimal_value = optimal_value(env, obs, cfg.gamma, cfg.maze);
    std::vector<Transition> transitions;
    double discount = 1.0;
    try {
      while (!world.done()) {
        ActionId action;
        if (successes < 3) {
          action = random_action(env, rng);
        } else {
          // elicit an action from the policy prompt over successful
          // trajectories; fall back to random when nothing parses
          auto blocks = sample_policy_prompt(
              buffer, cfg.recency_cutoff, rng, cfg.max_policy_blocks,
              /*successful_only=*/true, success_threshold);
          action = random_action(env, rng);
          if (!blocks.empty()) {
            std::string state_text =
                render_lines(encode_state(env, world.state(), cfg.hints, cfg.maze));
            CompletionRequest req =
                make_policy_request(env, blocks, state_text, policy_cfg);
            rec.tokens_used += count_tokens(req.prompt.render());
            if (auto completion = backend.complete(req, rng)) {
              if (auto parsed = parse_action(env, completion->raw)) {
                action = *parsed;
              }
            }
          }
        }
        Transition t;
        t.obs = world.state();
        t.action = action;
        t.episode_index = ep;
        t.step_index = rec.steps;
        StepResult r = world.step(action, rng);
        t.reward = r.reward;
        t.done = r.done;
        t.next_obs = r.next_state;
        transitions.push_back(std::move(t));
        rec.undiscounted_return += r.reward;
        rec.discounted_return += discount * r.reward;
        discount *= cfg.gamma;
        ++rec.steps;
      }
    } catch (const BackendUnavailable& e) {
      log.aborted = true;
      log.abort_reason = e.what();
      return log;
    }
    buffer.append(make_trajectory(std::move(transitions)));
    if (rec.undiscounted_return >= success_threshold) ++successes;
    log.episodes.push_back(finish_episode(rec, cfg, t0));
  }
  return log;
}

RunLog nearest_neighbor_train(EnvId env, const TrainConfig& cfg) {
  ReplayBuffer buffer;
  MatchingBackend backend(buffer, env, cfg.maze);
  RunLog log = train(env, backend, cfg, &buffer);
  log.algorithm = "nearest_neighbor";
  return log;
}

}  // namespace icpi
