#include "icpi/agent.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "icpi/textcodec.hpp"

namespace icpi {
namespace {

constexpr double kTieEps = 1e-12;

std::string state_text_of(EnvId env, const EnvState& state,
                          const TrainConfig& cfg) {
  return render_lines(encode_state(env, state, cfg.hints, cfg.maze));
}

CompletionRequest make_dynamics_request(EnvId env, QueryKind kind,
                                        const std::vector<Transition>& exemplars,
                                        const std::string& state_text,
                                        ActionId action,
                                        const TrainConfig& cfg) {
  CompletionRequest req;
  req.kind = kind;
  req.env = env;
  req.state_text = state_text;
  req.action = action;
  req.temperature = cfg.temperature;
  req.prompt.token_budget = cfg.token_budget;
  for (const auto& t : exemplars) {
    req.prompt.exemplar_blocks.push_back(
        render_lines(encode_transition(env, t, kind, cfg.hints, cfg.maze)));
  }
  std::string query = state_text + "\n" + action_line(env, action);
  if (kind == QueryKind::next_state) {
    std::string dyn = dynamics_line(env);
    if (!dyn.empty()) query += "\n" + dyn;
  }
  req.prompt.query = query + "\n";
  return req;
}

}  // namespace

CompletionRequest make_policy_request(
    EnvId env, const std::vector<std::vector<Transition>>& blocks,
    const std::string& state_text, const TrainConfig& cfg) {
  CompletionRequest req;
  req.kind = QueryKind::policy;
  req.env = env;
  req.state_text = state_text;
  req.temperature = cfg.temperature;
  req.prompt.token_budget = cfg.token_budget;
  std::string dyn = dynamics_line(env);
  for (const auto& block : blocks) {
    std::vector<PromptLine> lines;
    for (std::size_t i = 0; i < block.size(); ++i) {
      const Transition& t = block[i];
      std::string text = state_text_of(env, t.obs, cfg);
      req.policy_exemplars.emplace_back(text, t.action);
      for (auto& line : encode_state(env, t.obs, cfg.hints, cfg.maze)) {
        lines.push_back(std::move(line));
      }
      lines.push_back(encode_action(env, t.action));
      if (!dyn.empty() && i + 1 < block.size()) {
        lines.push_back({LineKind::dynamics, dyn});
      }
    }
    req.prompt.exemplar_blocks.push_back(render_lines(lines));
  }
  req.prompt.query = state_text + "\n";
  return req;
}

namespace {

// One completion plus parse, with optional resampling on unparseable output.
// backend_missed distinguishes "no answer at all" (matching-model miss) from
// a completion that would not parse.
template <typename Parser>
auto ask(Backend& backend, const CompletionRequest& req, Rng& rng,
         const TrainConfig& cfg, long& tokens, bool& backend_missed,
         Parser parse) -> decltype(parse(std::string{})) {
  backend_missed = false;
  for (int attempt = 0; attempt <= cfg.parse_retries; ++attempt) {
    tokens += count_tokens(req.prompt.render());
    auto completion = backend.complete(req, rng);
    if (!completion) {
      backend_missed = true;
      return std::nullopt;
    }
    auto value = parse(completion->raw);
    if (value) return value;
  }
  return std::nullopt;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must be in (0, 1)");
  }
  if (recency_cutoff < 1) throw std::invalid_argument("recency_cutoff must be >= 1");
  if (rollout_horizon < 1) throw std::invalid_argument("rollout_horizon must be >= 1");
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
}

RolloutTrace q_estimate(EnvId env, const EnvState& state, ActionId action,
                        const ReplayBuffer& buffer, Backend& backend,
                        const TrainConfig& cfg, Rng& rng) {
  RolloutTrace trace;
  if (buffer.empty()) return trace;

  std::string state_text = state_text_of(env, state, cfg);
  ActionId current = action;
  double discount = 1.0;

  for (int u = 0; u < cfg.rollout_horizon; ++u) {
    auto end_terminal = [&](int reward) {
      trace.steps.push_back({state_text, current, reward, true});
      trace.q_value += discount * reward;
    };

    bool missed = false;
    auto term_pool = sample_termination_prompt(buffer, current, rng, cfg.balance,
                                               cfg.constraints, cfg.max_pool);
    if (term_pool.empty()) return trace;
    auto done = ask(backend,
                    make_dynamics_request(env, QueryKind::termination, term_pool,
                                          state_text, current, cfg),
                    rng, cfg, trace.tokens_used, missed,
                    [](const std::string& raw) {
                      return parse_termination(raw);
                    });
    if (!done) {
      // a miss ends the rollout where it stands; an unparseable completion
      // counts as termination with zero reward
      if (!missed) end_terminal(0);
      return trace;
    }

    auto reward_pool = sample_reward_prompt(buffer, current, *done, rng,
                                            cfg.balance, cfg.constraints,
                                            cfg.max_pool);
    if (reward_pool.empty()) return trace;
    auto reward = ask(backend,
                      make_dynamics_request(env, QueryKind::reward, reward_pool,
                                            state_text, current, cfg),
                      rng, cfg, trace.tokens_used, missed,
                      [](const std::string& raw) {
                        return parse_reward(raw);
                      });
    if (!reward) {
      if (!missed) end_terminal(0);
      return trace;
    }

    trace.steps.push_back({state_text, current, *reward, *done});
    trace.q_value += discount * *reward;
    if (*done) return trace;
    discount *= cfg.gamma;

    auto obs_pool =
        sample_obs_prompt(buffer, current, rng, cfg.constraints, cfg.max_pool);
    if (obs_pool.empty()) return trace;
    auto next_text =
        ask(backend,
            make_dynamics_request(env, QueryKind::next_state, obs_pool,
                                  state_text, current, cfg),
            rng, cfg, trace.tokens_used, missed,
            [&](const std::string& raw) -> std::optional<std::string> {
              // validate well-formedness only; the raw text is what chains
              if (!parse_state(env, raw)) return std::nullopt;
              return raw;
            });
    if (!next_text) return trace;
    state_text = *next_text;

    auto blocks = sample_policy_prompt(
        buffer, cfg.recency_cutoff, rng, cfg.max_policy_blocks,
        cfg.successful_only_policy_prompts, cfg.success_threshold);
    if (blocks.empty()) return trace;
    auto next_action =
        ask(backend, make_policy_request(env, blocks, state_text, cfg), rng,
            cfg, trace.tokens_used, missed, [&](const std::string& raw) {
              return parse_action(env, raw);
            });
    if (!next_action) return trace;
    current = *next_action;
  }
  return trace;
}

ActionChoice select_action(EnvId env, const EnvState& state,
                           const ReplayBuffer& buffer, Backend& backend,
                           const TrainConfig& cfg, Rng& rng) {
  ActionChoice choice;
  const int n = action_count(env);
  double best = -1.0;
  for (int a = 0; a < n; ++a) {
    choice.traces.push_back(
        q_estimate(env, state, ActionId{a}, buffer, backend, cfg, rng));
    best = std::max(best, choice.traces.back().q_value);
  }
  std::vector<int> tied;
  for (int a = 0; a < n; ++a) {
    if (choice.traces[a].q_value >= best - kTieEps) tied.push_back(a);
  }
  choice.action.index =
      tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(rng)];
  return choice;
}

RunLog train(EnvId env, Backend& backend, const TrainConfig& cfg,
             ReplayBuffer* external_buffer) {
  cfg.validate();
  RunLog log;
  log.domain = to_string(env);
  log.algorithm = "icpi";
  log.seed = cfg.seed;

  ReplayBuffer local;
  ReplayBuffer& buffer = external_buffer ? *external_buffer : local;
  Rng rng(cfg.seed);
  Environment world(env, cfg.maze);

  int first_episode = static_cast<int>(buffer.size());
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    auto t0 = std::chrono::steady_clock::now();
    EpisodeRecord rec;
    rec.episode = first_episode + ep;

    EnvState obs = world.reset(rng);
    rec.optimal_value = optimal_value(env, obs, cfg.gamma, cfg.maze);

    std::vector<Transition> transitions;
    double discount = 1.0;
    try {
      while (!world.done()) {
        ActionChoice choice =
            select_action(env, world.state(), buffer, backend, cfg, rng);
        for (const auto& trace : choice.traces) {
          rec.tokens_used += trace.tokens_used;
        }
        Transition t;
        t.obs = world.state();
        t.action = choice.action;
        t.episode_index = rec.episode;
        t.step_index = rec.steps;
        StepResult r = world.step(choice.action, rng);
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
    rec.normalized_regret =
        normalized_regret(rec.discounted_return, rec.optimal_value);
    rec.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    log.episodes.push_back(rec);
  }
  return log;
}

}  // namespace icpi
