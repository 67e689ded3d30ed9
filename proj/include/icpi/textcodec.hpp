#pragma once

// Bidirectional mapping between domain values and the code-idiom prompt
// text: states, actions, rewards, terminations, hints, and the dynamics
// annotations that account for ball/alien movement between states.
//
// The exact layout is frozen by golden files under tests/golden/.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icpi/env.hpp"
#include "icpi/replay.hpp"

namespace icpi {

enum class LineKind { state, hint, action, reward, termination, dynamics };

struct PromptLine {
  LineKind kind;
  std::string text;  // never contains a newline
};

enum class QueryKind { termination, reward, next_state, policy };

// ---- encoding ----

// One `assert ...` line describing the full observation.
std::string state_line(EnvId env, const EnvState& state);
// The domain hint: task-relevant comparisons entailed by the state.
std::string hint_line(EnvId env, const EnvState& state,
                      const MazeLayout& maze = {});
std::string action_line(EnvId env, ActionId action);
std::string reward_line(int reward);
std::string termination_line(bool done);
// "ball.descend()" / "for a in aliens: a.descend()"; empty when the domain
// has no between-state dynamics to annotate.
std::string dynamics_line(EnvId env);

std::vector<PromptLine> encode_state(EnvId env, const EnvState& state,
                                     bool with_hint,
                                     const MazeLayout& maze = {});
PromptLine encode_action(EnvId env, ActionId action);

// Full exemplar block for one transition, shaped for the given query kind:
// state line(s), action line, then the reward / termination / next-state
// tail that kind requires.
std::vector<PromptLine> encode_transition(EnvId env, const Transition& t,
                                          QueryKind kind, bool with_hint,
                                          const MazeLayout& maze = {});

std::string render_lines(const std::vector<PromptLine>& lines);

// ---- parsing (completions are untrusted; nullopt = no parseable value) ----

std::optional<int> parse_reward(std::string_view completion);
std::optional<bool> parse_termination(std::string_view completion);
std::optional<EnvState> parse_state(EnvId env, std::string_view completion);
std::optional<ActionId> parse_action(EnvId env, std::string_view completion);

// ---- token budget ----

using Tokenizer = std::function<int(std::string_view)>;

// Whitespace-and-punctuation approximation with a calibration constant;
// an upper bound is all budget enforcement needs.
int count_tokens(std::string_view text);

inline constexpr int kDefaultTokenBudget = 4000;

struct Prompt {
  std::vector<std::string> exemplar_blocks;  // rendered, oldest first
  std::string query;                         // partial block the model continues
  int token_budget = kDefaultTokenBudget;

  // Blocks joined by blank lines, query last. Whole blocks are dropped from
  // the front until the budget holds.
  std::string render(const Tokenizer& tokenizer = count_tokens) const;
};

}  // namespace icpi
