#include "icpi/textcodec.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace icpi {
namespace {

std::string coord_text(const Coord& c) {
  return "C(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")";
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string eq_or_ne(bool equal) { return equal ? " == " : " != "; }

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string current;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  lines.push_back(current);
  return lines;
}

const std::regex kRewardRe(R"(assert reward == (-?\d+))");
const std::regex kChainStateRe(R"(assert state == (\d+)\s*$)");
const std::regex kDistractorStateRe(R"(assert state == \((\d+), (\d+)\))");
const std::regex kMazeStateRe(R"(assert state == C\((\d+), (\d+)\))");
const std::regex kCatchStateRe(
    R"(assert paddle == C\((\d+), (\d+)\) and ball == C\((\d+), (\d+)\))");
const std::regex kInvadersStateRe(
    R"(assert ship == C\((\d+), (\d+)\) and aliens == \[(C\(\d+, \d+\)|None), (C\(\d+, \d+\)|None)\])");
const std::regex kAlienRe(R"(C\((\d+), (\d+)\))");
const std::regex kPointMassStateRe(
    R"(assert pos == (-?\d+\.\d+) and vel == (-?\d+\.\d+))");

std::optional<EnvState> parse_state_line(EnvId env, const std::string& line) {
  std::smatch m;
  switch (env) {
    case EnvId::chain:
      if (std::regex_search(line, m, kChainStateRe)) {
        int pos = std::stoi(m[1]);
        if (pos <= 7) return ChainState{pos};
      }
      return std::nullopt;
    case EnvId::distractor_chain:
      if (std::regex_search(line, m, kDistractorStateRe)) {
        int pos = std::stoi(m[1]);
        int d = std::stoi(m[2]);
        if (pos <= 7 && d <= 7) return DistractorChainState{pos, d};
      }
      return std::nullopt;
    case EnvId::maze:
      if (std::regex_search(line, m, kMazeStateRe)) {
        return MazeState{std::stoi(m[1]), std::stoi(m[2])};
      }
      return std::nullopt;
    case EnvId::mini_catch:
      if (std::regex_search(line, m, kCatchStateRe)) {
        MiniCatchState s;
        s.paddle = {std::stoi(m[1]), std::stoi(m[2])};
        s.ball = {std::stoi(m[3]), std::stoi(m[4])};
        return s;
      }
      return std::nullopt;
    case EnvId::mini_invaders:
      if (std::regex_search(line, m, kInvadersStateRe)) {
        MiniInvadersState s;
        s.ship = {std::stoi(m[1]), std::stoi(m[2])};
        for (int i = 0; i < 2; ++i) {
          std::string cell = m[3 + i];
          std::smatch cm;
          if (std::regex_match(cell, cm, kAlienRe)) {
            s.aliens[i] = Coord{std::stoi(cm[1]), std::stoi(cm[2])};
          } else if (cell == "None") {
            s.aliens[i].reset();
          } else {
            return std::nullopt;
          }
        }
        return s;
      }
      return std::nullopt;
    case EnvId::point_mass:
      if (std::regex_search(line, m, kPointMassStateRe)) {
        return PointMassState{std::stod(m[1]), std::stod(m[2])};
      }
      return std::nullopt;
  }
  return std::nullopt;
}

std::string invaders_alien_text(const std::optional<Coord>& alien) {
  return alien ? coord_text(*alien) : std::string("None");
}

}  // namespace

std::string state_line(EnvId env, const EnvState& state) {
  switch (env) {
    case EnvId::chain:
      return "assert state == " +
             std::to_string(std::get<ChainState>(state).pos);
    case EnvId::distractor_chain: {
      const auto& s = std::get<DistractorChainState>(state);
      return "assert state == (" + std::to_string(s.pos) + ", " +
             std::to_string(s.distractor) + ")";
    }
    case EnvId::maze: {
      const auto& s = std::get<MazeState>(state);
      return "assert state == " + coord_text({s.x, s.y});
    }
    case EnvId::mini_catch: {
      const auto& s = std::get<MiniCatchState>(state);
      return "assert paddle == " + coord_text(s.paddle) + " and ball == " +
             coord_text(s.ball);
    }
    case EnvId::mini_invaders: {
      const auto& s = std::get<MiniInvadersState>(state);
      return "assert ship == " + coord_text(s.ship) + " and aliens == [" +
             invaders_alien_text(s.aliens[0]) + ", " +
             invaders_alien_text(s.aliens[1]) + "]";
    }
    case EnvId::point_mass: {
      const auto& s = std::get<PointMassState>(state);
      return "assert pos == " + two_decimals(s.pos) + " and vel == " +
             two_decimals(s.vel);
    }
  }
  throw std::invalid_argument("bad EnvId");
}

std::string hint_line(EnvId env, const EnvState& state, const MazeLayout& maze) {
  switch (env) {
    case EnvId::chain: {
      int pos = std::get<ChainState>(state).pos;
      return "assert state" + eq_or_ne(pos == 4) + "4";
    }
    case EnvId::distractor_chain: {
      int pos = std::get<DistractorChainState>(state).pos;
      return "assert state[0]" + eq_or_ne(pos == 4) + "4";
    }
    case EnvId::maze: {
      const auto& s = std::get<MazeState>(state);
      bool at_goal = Coord{s.x, s.y} == maze.goal;
      return "assert state" + eq_or_ne(at_goal) + coord_text(maze.goal);
    }
    case EnvId::mini_catch: {
      const auto& s = std::get<MiniCatchState>(state);
      std::string rel = s.paddle.x == s.ball.x  ? "paddle.x == ball.x"
                        : s.paddle.x < s.ball.x ? "paddle.x < ball.x"
                                                : "paddle.x > ball.x";
      return "assert paddle.x == " + std::to_string(s.paddle.x) +
             " and ball.x == " + std::to_string(s.ball.x) + " and " + rel +
             " and ball.y == " + std::to_string(s.ball.y);
    }
    case EnvId::mini_invaders: {
      const auto& s = std::get<MiniInvadersState>(state);
      std::string text = "assert ship.x == " + std::to_string(s.ship.x);
      for (int i = 0; i < 2; ++i) {
        std::string name = "aliens[" + std::to_string(i) + "]";
        if (s.aliens[i]) {
          text += " and " + name + ".x == " + std::to_string(s.aliens[i]->x) +
                  " and " + name + ".x" + eq_or_ne(s.aliens[i]->x == s.ship.x) +
                  "ship.x";
        } else {
          text += " and " + name + " is None";
        }
      }
      return text;
    }
    case EnvId::point_mass: {
      const auto& s = std::get<PointMassState>(state);
      std::string pos_part = s.pos < -2.0  ? "pos < -2"
                             : s.pos > 2.0 ? "pos > 2"
                                           : "-2 <= pos <= 2";
      std::string vel_part =
          s.vel == 0.0 ? "vel == 0" : "vel != 0";
      return "assert " + pos_part + " and " + vel_part;
    }
  }
  throw std::invalid_argument("bad EnvId");
}

std::string action_line(EnvId env, ActionId action) {
  const auto& names = action_names(env);
  if (action.index < 0 || action.index >= static_cast<int>(names.size())) {
    throw std::invalid_argument("action index out of range");
  }
  const std::string& name = names[action.index];
  switch (env) {
    case EnvId::mini_catch: return "paddle." + name + "()";
    case EnvId::mini_invaders: return "ship." + name + "()";
    case EnvId::point_mass: return name + "(pos, vel)";
    default: return name + "()";
  }
}

std::string reward_line(int reward) {
  return "assert reward == " + std::to_string(reward);
}

std::string termination_line(bool done) {
  return done ? "assert done" : "assert not done";
}

std::string dynamics_line(EnvId env) {
  switch (env) {
    case EnvId::mini_catch: return "ball.descend()";
    case EnvId::mini_invaders: return "for a in aliens: a.descend()";
    default: return "";
  }
}

std::vector<PromptLine> encode_state(EnvId env, const EnvState& state,
                                     bool with_hint, const MazeLayout& maze) {
  std::vector<PromptLine> lines;
  lines.push_back({LineKind::state, state_line(env, state)});
  if (with_hint) lines.push_back({LineKind::hint, hint_line(env, state, maze)});
  return lines;
}

PromptLine encode_action(EnvId env, ActionId action) {
  return {LineKind::action, action_line(env, action)};
}

std::vector<PromptLine> encode_transition(EnvId env, const Transition& t,
                                          QueryKind kind, bool with_hint,
                                          const MazeLayout& maze) {
  std::vector<PromptLine> lines = encode_state(env, t.obs, with_hint, maze);
  lines.push_back(encode_action(env, t.action));
  switch (kind) {
    case QueryKind::termination:
      lines.push_back({LineKind::termination, termination_line(t.done)});
      break;
    case QueryKind::reward:
      lines.push_back({LineKind::reward, reward_line(t.reward)});
      break;
    case QueryKind::next_state: {
      std::string dyn = dynamics_line(env);
      if (!dyn.empty()) lines.push_back({LineKind::dynamics, dyn});
      for (auto& line : encode_state(env, t.next_obs, with_hint, maze)) {
        lines.push_back(std::move(line));
      }
      break;
    }
    case QueryKind::policy:
      // (s, a) pair only; callers chain pairs into subsequence blocks
      break;
  }
  return lines;
}

std::string render_lines(const std::vector<PromptLine>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out += '\n';
    out += lines[i].text;
  }
  return out;
}

std::optional<int> parse_reward(std::string_view completion) {
  for (const auto& line : split_lines(completion)) {
    std::smatch m;
    if (std::regex_search(line, m, kRewardRe)) return std::stoi(m[1]);
  }
  return std::nullopt;
}

std::optional<bool> parse_termination(std::string_view completion) {
  for (const auto& line : split_lines(completion)) {
    if (line.find("assert not done") != std::string::npos) return false;
    if (line.find("assert done") != std::string::npos) return true;
  }
  return std::nullopt;
}

std::optional<EnvState> parse_state(EnvId env, std::string_view completion) {
  for (const auto& line : split_lines(completion)) {
    if (auto state = parse_state_line(env, line)) return state;
  }
  return std::nullopt;
}

std::optional<ActionId> parse_action(EnvId env, std::string_view completion) {
  const int n = action_count(env);
  for (const auto& line : split_lines(completion)) {
    // first rendering appearing in the line wins
    std::size_t best_pos = std::string::npos;
    int best_action = -1;
    for (int a = 0; a < n; ++a) {
      std::size_t pos = line.find(action_line(env, ActionId{a}));
      if (env == EnvId::point_mass && pos == std::string::npos) {
        // accept completed argument forms like accel(1.50, 0.00)
        pos = line.find(action_names(env)[a] + "(");
      }
      if (pos != std::string::npos && pos < best_pos) {
        best_pos = pos;
        best_action = a;
      }
    }
    if (best_action >= 0) return ActionId{best_action};
  }
  return std::nullopt;
}

int count_tokens(std::string_view text) {
  // pieces: runs of word characters, plus individual punctuation characters
  long pieces = 0;
  bool in_word = false;
  for (char ch : text) {
    unsigned char u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || ch == '_') {
      if (!in_word) ++pieces;
      in_word = true;
    } else {
      in_word = false;
      if (!std::isspace(u)) ++pieces;
    }
  }
  constexpr double kCalibration = 1.3;  // upper-bound fudge vs a real BPE
  return static_cast<int>(std::ceil(kCalibration * static_cast<double>(pieces)));
}

std::string Prompt::render(const Tokenizer& tokenizer) const {
  std::size_t first = 0;
  std::string out;
  for (;;) {
    out.clear();
    for (std::size_t i = first; i < exemplar_blocks.size(); ++i) {
      out += exemplar_blocks[i];
      out += "\n\n";
    }
    out += query;
    if (tokenizer(out) <= token_budget || first >= exemplar_blocks.size()) {
      return out;
    }
    ++first;  // drop whole blocks from the front until the budget holds
  }
}

}  // namespace icpi
