#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "icpi/textcodec.hpp"

using namespace icpi;

namespace {

EnvState sample_state(EnvId id, Rng& rng) { return reset_state(id, rng); }

std::string golden_path(const std::string& name) {
  return std::string(ICPI_GOLDEN_DIR) + "/" + name;
}

// Golden files are written on first run and compared on every later run.
void check_golden(const std::string& name, const std::string& text) {
  std::filesystem::path path = golden_path(name);
  if (!std::filesystem::exists(path)) {
    std::ofstream out(path);
    out << text;
    FAIL_CHECK("golden file created, rerun to verify: " << name);
    return;
  }
  std::ifstream in(path);
  std::ostringstream want;
  want << in.rdbuf();
  CHECK_MESSAGE(text == want.str(), "golden mismatch for " << name);
}

Transition fixed_transition(EnvId env) {
  Transition t;
  Rng rng(1234);
  t.obs = reset_state(env, rng);
  t.action = ActionId{0};
  StepResult r = step_dynamics(env, t.obs, t.action, rng);
  t.reward = r.reward;
  t.done = r.done;
  t.next_obs = r.next_state;
  return t;
}

}  // namespace

TEST_CASE("state lines match the documented format") {
  CHECK(state_line(EnvId::chain, ChainState{3}) == "assert state == 3");
  CHECK(state_line(EnvId::distractor_chain, DistractorChainState{3, 6}) ==
        "assert state == (3, 6)");
  CHECK(state_line(EnvId::maze, MazeState{2, 2}) == "assert state == C(2, 2)");
  CHECK(state_line(EnvId::mini_catch,
                   MiniCatchState{{2, 0}, {1, 3}}) ==
        "assert paddle == C(2, 0) and ball == C(1, 3)");
  MiniInvadersState inv;
  inv.ship = {0, 0};
  inv.aliens[0] = Coord{1, 3};
  inv.aliens[1].reset();
  CHECK(state_line(EnvId::mini_invaders, inv) ==
        "assert ship == C(0, 0) and aliens == [C(1, 3), None]");
  CHECK(state_line(EnvId::point_mass, PointMassState{1.5, 0.0}) ==
        "assert pos == 1.50 and vel == 0.00");
  // negative zero never leaks into the text
  CHECK(state_line(EnvId::point_mass, PointMassState{-0.001, 0.0}) ==
        "assert pos == 0.00 and vel == 0.00");
}

TEST_CASE("chain hint compares the state with the goal") {
  auto lines = encode_state(EnvId::chain, ChainState{3}, true);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].text == "assert state == 3");
  CHECK(lines[1].text == "assert state != 4");
  auto goal = encode_state(EnvId::chain, ChainState{4}, true);
  CHECK(goal[1].text == "assert state == 4");
  auto bare = encode_state(EnvId::chain, ChainState{3}, false);
  CHECK(bare.size() == 1);
}

TEST_CASE("action lines") {
  CHECK(action_line(EnvId::chain, ActionId{2}) == "try_goal()");
  CHECK(action_line(EnvId::mini_catch, ActionId{0}) == "paddle.stay()");
  CHECK(action_line(EnvId::mini_invaders, ActionId{2}) == "ship.shoot()");
  CHECK(action_line(EnvId::point_mass, ActionId{0}) == "accel(pos, vel)");
  CHECK(action_line(EnvId::maze, ActionId{0}) == "up()");
  CHECK_THROWS_AS(action_line(EnvId::chain, ActionId{5}), std::invalid_argument);
}

TEST_CASE("transition blocks carry the right tail per query kind") {
  Rng rng(3);
  Transition t;
  t.obs = ChainState{4};
  t.action = ActionId{2};
  t.reward = 1;
  t.done = true;
  t.next_obs = ChainState{4};
  auto term = encode_transition(EnvId::chain, t, QueryKind::termination, true);
  CHECK(term.back().text == "assert done");
  auto rew = encode_transition(EnvId::chain, t, QueryKind::reward, true);
  CHECK(rew.back().text == "assert reward == 1");

  Transition ongoing;
  ongoing.obs = ChainState{2};
  ongoing.action = ActionId{1};
  ongoing.next_obs = ChainState{3};
  auto nt = encode_transition(EnvId::chain, ongoing, QueryKind::termination, false);
  CHECK(nt.back().text == "assert not done");

  // the falling ball gets its dynamics annotation between states
  Transition c = fixed_transition(EnvId::mini_catch);
  auto block = encode_transition(EnvId::mini_catch, c, QueryKind::next_state, true);
  bool has_descend = false;
  for (const auto& line : block) {
    if (line.text == "ball.descend()") has_descend = true;
  }
  CHECK(has_descend);
}

TEST_CASE("parsers recover reward, termination, and actions") {
  CHECK(parse_reward("assert reward == 1") == 1);
  CHECK(parse_reward("garbage\nassert reward == 0\ntrailing") == 0);
  CHECK_FALSE(parse_reward("nothing here").has_value());
  CHECK(parse_termination("assert done") == true);
  CHECK(parse_termination("assert not done") == false);
  CHECK_FALSE(parse_termination("assert state == 3").has_value());
  CHECK(parse_action(EnvId::mini_catch, "paddle.left()") == ActionId{1});
  CHECK(parse_action(EnvId::chain, "try_goal()") == ActionId{2});
  CHECK(parse_action(EnvId::point_mass, "accel(1.50, 0.00)") == ActionId{0});
  CHECK_FALSE(parse_action(EnvId::chain, "jump()").has_value());
}

TEST_CASE("round-trip: actions, rewards, terminations in every domain") {
  for (EnvId id : kAllEnvs) {
    for (int a = 0; a < action_count(id); ++a) {
      CHECK(parse_action(id, action_line(id, ActionId{a})) == ActionId{a});
    }
  }
  for (int r : {0, 1}) CHECK(parse_reward(reward_line(r)) == r);
  for (bool d : {false, true}) CHECK(parse_termination(termination_line(d)) == d);
}

TEST_CASE("encode/parse state round-trips over sampled reachable states") {
  Rng rng(99);
  for (EnvId id : kAllEnvs) {
    for (int i = 0; i < 200; ++i) {
      EnvState s = sample_state(id, rng);
      // walk a few steps to leave the start distribution
      for (int k = 0; k < i % 4; ++k) {
        StepResult r = step_dynamics(
            id, s, ActionId{static_cast<int>(rng() % action_count(id))}, rng);
        if (r.done) break;
        s = r.next_state;
      }
      auto parsed = parse_state(id, state_line(id, s));
      REQUIRE(parsed.has_value());
      if (id == EnvId::point_mass) {
        // parsing recovers the rounded observation
        auto got = std::get<PointMassState>(*parsed);
        auto want = std::get<PointMassState>(s);
        CHECK(got.pos == doctest::Approx(want.pos).epsilon(0.01));
        CHECK(got.vel == doctest::Approx(want.vel).epsilon(0.01));
      } else {
        CHECK(*parsed == s);
      }
      // hint is entailed by the state line: recompute from the parsed state
      if (id != EnvId::point_mass) {
        CHECK(hint_line(id, *parsed) == hint_line(id, s));
      }
    }
  }
}

TEST_CASE("parse_state ignores hint lines and picks the state line") {
  auto full = render_lines(encode_state(EnvId::chain, ChainState{3}, true));
  auto parsed = parse_state(EnvId::chain, full);
  REQUIRE(parsed.has_value());
  CHECK(std::get<ChainState>(*parsed).pos == 3);
}

TEST_CASE("token counting") {
  CHECK(count_tokens("") == 0);
  CHECK(count_tokens("assert state == 3") > 0);
  // merge property: concatenation never splits into more pieces
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    std::string a, b;
    for (int k = 0; k < static_cast<int>(rng() % 20); ++k) {
      a.push_back("abc =().,7 "[rng() % 11]);
    }
    for (int k = 0; k < static_cast<int>(rng() % 20); ++k) {
      b.push_back("xyz =().,3 "[rng() % 11]);
    }
    CHECK(count_tokens(a + b) <= count_tokens(a) + count_tokens(b) + 1);
  }
  // monotone in text length for appended text
  std::string s = "assert reward == 1";
  CHECK(count_tokens(s + " and more") >= count_tokens(s));
}

TEST_CASE("prompt rendering clips whole blocks from the front") {
  Prompt p;
  for (int i = 0; i < 50; ++i) {
    p.exemplar_blocks.push_back("assert state == " + std::to_string(i % 8) +
                                "\nright()\nassert not done");
  }
  p.query = "assert state == 5\nright()\n";
  p.token_budget = 120;
  std::string text = p.render();
  CHECK(count_tokens(text) <= p.token_budget);
  // the query survives and the kept blocks are the most recent ones
  CHECK(text.find("assert state == 5\nright()\n") != std::string::npos);
  CHECK(text.rfind("right()\n") == text.size() - 8);
  // blocks are dropped whole, never mid-line
  CHECK(text.find("\n\nright()") == std::string::npos);
}

TEST_CASE("golden: full prompt blocks are stable across runs") {
  for (EnvId id : kAllEnvs) {
    Transition t = fixed_transition(id);
    std::string name = to_string(id);
    check_golden(name + "_termination.txt",
                 render_lines(encode_transition(id, t, QueryKind::termination, true)));
    check_golden(name + "_reward.txt",
                 render_lines(encode_transition(id, t, QueryKind::reward, true)));
    check_golden(name + "_next_state.txt",
                 render_lines(encode_transition(id, t, QueryKind::next_state, true)));
  }
}

TEST_CASE("golden: fixed exemplar block has a fixed token count") {
  Transition t = fixed_transition(EnvId::chain);
  std::string block =
      render_lines(encode_transition(EnvId::chain, t, QueryKind::termination, true));
  check_golden("chain_termination_tokens.txt",
               std::to_string(count_tokens(block)));
}
