#include "icpi/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace icpi {
namespace {

int clamp_int(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// chain actions
constexpr int kLeft = 0, kRight = 1, kTryGoal = 2;
constexpr int kChainGoal = 4;

// maze actions
constexpr int kUp = 0, kDown = 1, kMazeLeft = 2, kMazeRight = 3;

// mini-catch actions
constexpr int kStay = 0, kCatchLeft = 1, kCatchRight = 2;

// mini-invaders actions
constexpr int kInvLeft = 0, kInvRight = 1, kShoot = 2;

// point-mass actions
constexpr int kAccel = 0;

constexpr double kPmBound = 2.0;  // success region is the closed interval

int chain_move(int pos, ActionId a) {
  if (a.index == kLeft) return clamp_int(pos - 1, 0, 7);
  if (a.index == kRight) return clamp_int(pos + 1, 0, 7);
  return pos;
}

StepResult step_chain(const ChainState& s, ActionId a) {
  if (a.index == kTryGoal) {
    return {s, s.pos == kChainGoal ? 1 : 0, true};
  }
  return {ChainState{chain_move(s.pos, a)}, 0, false};
}

StepResult step_distractor(const DistractorChainState& s, ActionId a, Rng& rng) {
  StepResult inner = step_chain(ChainState{s.pos}, a);
  DistractorChainState next{std::get<ChainState>(inner.next_state).pos,
                            uniform_int(rng, 0, 7)};
  return {next, inner.reward, inner.done};
}

StepResult step_maze(const MazeState& s, ActionId a, const MazeLayout& maze) {
  Coord c{s.x, s.y};
  Coord next = c;
  switch (a.index) {
    case kUp: next.y += 1; break;
    case kDown: next.y -= 1; break;
    case kMazeLeft: next.x -= 1; break;
    case kMazeRight: next.x += 1; break;
  }
  bool off_grid = next.x < 0 || next.x >= maze.width || next.y < 0 ||
                  next.y >= maze.height;
  if (off_grid || maze.blocked(next)) next = c;  // bumps are no-ops
  bool done = next == maze.goal;
  return {MazeState{next.x, next.y}, done ? 1 : 0, done};
}

// Ball descends first; the catch is decided the moment it reaches paddle
// height, so the paddle's position entering the final step is what counts.
StepResult step_catch(const MiniCatchState& s, ActionId a) {
  MiniCatchState next = s;
  next.ball.y -= 1;
  if (next.ball.y == 0) {
    return {next, next.paddle.x == next.ball.x ? 1 : 0, true};
  }
  if (a.index == kCatchLeft) next.paddle.x = clamp_int(next.paddle.x - 1, 0, 3);
  if (a.index == kCatchRight) next.paddle.x = clamp_int(next.paddle.x + 1, 0, 3);
  return {next, 0, false};
}

StepResult step_invaders(const MiniInvadersState& s, ActionId a) {
  MiniInvadersState next = s;
  int reward = 0;
  if (a.index == kShoot) {
    // instant hit on the lowest alien in the ship's column
    int target = -1;
    for (int i = 0; i < 2; ++i) {
      const auto& alien = next.aliens[i];
      if (alien && alien->x == next.ship.x &&
          (target < 0 || alien->y < next.aliens[target]->y)) {
        target = i;
      }
    }
    if (target >= 0) {
      next.aliens[target].reset();
      reward = 1;
    }
  } else {
    int dx = a.index == kInvLeft ? -1 : 1;
    next.ship.x = clamp_int(next.ship.x + dx, 0, 3);
  }
  bool all_down = !next.aliens[0] && !next.aliens[1];
  if (all_down) return {next, reward, true};
  bool landed = false;
  for (auto& alien : next.aliens) {
    if (!alien) continue;
    alien->y -= 1;
    if (alien->y == 0) landed = true;
  }
  return {next, reward, landed};
}

StepResult step_point_mass(const PointMassState& s, ActionId a) {
  PointMassState next = s;
  next.vel += a.index == kAccel ? 1.0 : -1.0;
  next.pos += next.vel;
  bool done = next.vel == 0.0 && next.pos >= -kPmBound && next.pos <= kPmBound;
  return {next, done ? 1 : 0, done};
}

double best_return(EnvId id, const EnvState& state, double gamma,
                   int steps_left, const MazeLayout& maze) {
  if (steps_left == 0) return 0.0;
  Rng dummy(0);  // only distractor consults it, and that path is never taken
  double best = 0.0;
  for (int a = 0; a < action_count(id); ++a) {
    StepResult r = step_dynamics(id, state, ActionId{a}, dummy, maze);
    double v = r.reward;
    if (!r.done) {
      v += gamma * best_return(id, r.next_state, gamma, steps_left - 1, maze);
    }
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

bool MazeLayout::blocked(Coord c) const {
  return std::find(obstacles.begin(), obstacles.end(), c) != obstacles.end();
}

std::string to_string(EnvId id) {
  switch (id) {
    case EnvId::chain: return "chain";
    case EnvId::distractor_chain: return "distractor-chain";
    case EnvId::maze: return "maze";
    case EnvId::mini_catch: return "mini-catch";
    case EnvId::mini_invaders: return "mini-invaders";
    case EnvId::point_mass: return "point-mass";
  }
  throw std::invalid_argument("bad EnvId");
}

EnvId parse_env_id(const std::string& name) {
  for (EnvId id : kAllEnvs) {
    if (to_string(id) == name) return id;
  }
  throw std::invalid_argument("unknown environment: " + name);
}

int action_count(EnvId id) {
  switch (id) {
    case EnvId::maze: return 4;
    case EnvId::point_mass: return 2;
    default: return 3;
  }
}

const std::vector<std::string>& action_names(EnvId id) {
  static const std::vector<std::string> chain = {"left", "right", "try_goal"};
  static const std::vector<std::string> maze = {"up", "down", "left", "right"};
  static const std::vector<std::string> mini_catch = {"stay", "left", "right"};
  static const std::vector<std::string> invaders = {"left", "right", "shoot"};
  static const std::vector<std::string> point_mass = {"accel", "decel"};
  switch (id) {
    case EnvId::chain:
    case EnvId::distractor_chain: return chain;
    case EnvId::maze: return maze;
    case EnvId::mini_catch: return mini_catch;
    case EnvId::mini_invaders: return invaders;
    case EnvId::point_mass: return point_mass;
  }
  throw std::invalid_argument("bad EnvId");
}

EnvState reset_state(EnvId id, Rng& rng, const MazeLayout& maze) {
  switch (id) {
    case EnvId::chain:
      return ChainState{uniform_int(rng, 0, 7)};
    case EnvId::distractor_chain:
      return DistractorChainState{uniform_int(rng, 0, 7), uniform_int(rng, 0, 7)};
    case EnvId::maze:
      return MazeState{maze.start.x, maze.start.y};
    case EnvId::mini_catch:
      return MiniCatchState{{uniform_int(rng, 0, 3), 0},
                            {uniform_int(rng, 0, 3), 5}};
    case EnvId::mini_invaders: {
      // two aliens in two distinct columns of {0..3}
      int c1 = uniform_int(rng, 0, 3);
      int c2 = uniform_int(rng, 0, 2);
      if (c2 >= c1) ++c2;
      MiniInvadersState s;
      s.ship = {uniform_int(rng, 0, 3), 0};
      s.aliens[0] = Coord{c1, 4};
      s.aliens[1] = Coord{c2, 4};
      return s;
    }
    case EnvId::point_mass:
      return PointMassState{std::uniform_real_distribution<double>(-6.0, 6.0)(rng),
                            0.0};
  }
  throw std::invalid_argument("bad EnvId");
}

StepResult step_dynamics(EnvId id, const EnvState& state, ActionId action,
                         Rng& rng, const MazeLayout& maze) {
  if (action.index < 0 || action.index >= action_count(id)) {
    throw std::invalid_argument("action index out of range");
  }
  switch (id) {
    case EnvId::chain:
      return step_chain(std::get<ChainState>(state), action);
    case EnvId::distractor_chain:
      return step_distractor(std::get<DistractorChainState>(state), action, rng);
    case EnvId::maze:
      return step_maze(std::get<MazeState>(state), action, maze);
    case EnvId::mini_catch:
      return step_catch(std::get<MiniCatchState>(state), action);
    case EnvId::mini_invaders:
      return step_invaders(std::get<MiniInvadersState>(state), action);
    case EnvId::point_mass:
      return step_point_mass(std::get<PointMassState>(state), action);
  }
  throw std::invalid_argument("bad EnvId");
}

double optimal_value(EnvId id, const EnvState& state, double gamma,
                     const MazeLayout& maze) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must be in (0, 1)");
  }
  // the distractor carries no reward-relevant information
  if (id == EnvId::distractor_chain) {
    ChainState s{std::get<DistractorChainState>(state).pos};
    return best_return(EnvId::chain, s, gamma, kTimeLimit, maze);
  }
  return best_return(id, state, gamma, kTimeLimit, maze);
}

Environment::Environment(EnvId id, MazeLayout maze)
    : id_(id), maze_(std::move(maze)), state_(ChainState{}) {}

EnvState Environment::reset(Rng& rng) {
  state_ = reset_state(id_, rng, maze_);
  done_ = false;
  steps_ = 0;
  return state_;
}

StepResult Environment::step(ActionId action, Rng& rng) {
  if (done_) throw std::logic_error("step() on a finished episode");
  StepResult r = step_dynamics(id_, state_, action, rng, maze_);
  ++steps_;
  if (!r.done && steps_ >= kTimeLimit) r.done = true;
  state_ = r.next_state;
  done_ = r.done;
  return r;
}

}  // namespace icpi
