#pragma once

// The six benchmark domains behind a common reset/step interface, plus an
// exact optimal-value oracle used for regret normalization.
//
// All domains are deterministic except for start-state sampling and the
// distractor component of distractor-chain. Episodes never exceed
// kTimeLimit steps.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace icpi {

using Rng = std::mt19937_64;

enum class EnvId {
  chain,
  distractor_chain,
  maze,
  mini_catch,
  mini_invaders,
  point_mass,
};

inline constexpr std::array<EnvId, 6> kAllEnvs = {
    EnvId::chain,          EnvId::distractor_chain, EnvId::maze,
    EnvId::mini_catch,     EnvId::mini_invaders,    EnvId::point_mass,
};

std::string to_string(EnvId id);
EnvId parse_env_id(const std::string& name);  // throws std::invalid_argument

inline constexpr int kTimeLimit = 8;

struct Coord {
  int x = 0;
  int y = 0;
  bool operator==(const Coord&) const = default;
};

struct ChainState {
  int pos = 0;  // 0..7, goal at 4
  bool operator==(const ChainState&) const = default;
};

struct DistractorChainState {
  int pos = 0;         // true state, chain dynamics
  int distractor = 0;  // resamples uniformly every step
  bool operator==(const DistractorChainState&) const = default;
};

struct MazeState {
  int x = 0;
  int y = 0;
  bool operator==(const MazeState&) const = default;
};

struct MiniCatchState {
  Coord paddle;  // y always 0
  Coord ball;    // x fixed while falling, y in 0..5
  bool operator==(const MiniCatchState&) const = default;
};

struct MiniInvadersState {
  Coord ship;  // y always 0
  std::array<std::optional<Coord>, 2> aliens;  // nullopt once shot down
  bool operator==(const MiniInvadersState&) const = default;
};

struct PointMassState {
  double pos = 0.0;  // exact internally, observed rounded to 2 decimals
  double vel = 0.0;
  bool operator==(const PointMassState&) const = default;
};

using EnvState = std::variant<ChainState, DistractorChainState, MazeState,
                              MiniCatchState, MiniInvadersState, PointMassState>;

struct ActionId {
  int index = 0;
  bool operator==(const ActionId&) const = default;
};

struct StepResult {
  EnvState next_state;
  int reward = 0;  // always 0 or 1
  bool done = false;
};

// Maze geometry is configurable; this default is the documented layout used
// by all golden tests.
struct MazeLayout {
  int width = 3;
  int height = 3;
  Coord start{0, 0};
  Coord goal{2, 2};
  std::vector<Coord> obstacles{{1, 1}};

  bool blocked(Coord c) const;
};

int action_count(EnvId id);
const std::vector<std::string>& action_names(EnvId id);

// Pure dynamics. No time-limit handling; the Environment wrapper owns the
// step counter. rng is consulted only by distractor-chain.
EnvState reset_state(EnvId id, Rng& rng, const MazeLayout& maze = {});
StepResult step_dynamics(EnvId id, const EnvState& state, ActionId action,
                         Rng& rng, const MazeLayout& maze = {});

// Exact optimal discounted return from `state` assuming a full kTimeLimit
// step budget, by exhaustive search over action sequences. Used only for
// regret normalization. Pure and thread-safe.
double optimal_value(EnvId id, const EnvState& state, double gamma,
                     const MazeLayout& maze = {});

// Stateful wrapper: applies the 8-step time limit and guards against
// stepping a finished episode.
class Environment {
 public:
  explicit Environment(EnvId id, MazeLayout maze = {});

  EnvState reset(Rng& rng);
  StepResult step(ActionId action, Rng& rng);  // throws std::logic_error if done

  EnvId id() const { return id_; }
  const EnvState& state() const { return state_; }
  const MazeLayout& maze() const { return maze_; }
  bool done() const { return done_; }
  int steps() const { return steps_; }

 private:
  EnvId id_;
  MazeLayout maze_;
  EnvState state_;
  bool done_ = true;
  int steps_ = 0;
};

}  // namespace icpi
