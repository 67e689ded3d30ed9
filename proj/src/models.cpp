#include "icpi/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include <httplib.h>

namespace icpi {
namespace {

const std::string kOracleName = "oracle";
const std::string kMatchingName = "matching";
const std::string kRemoteName = "remote";

std::string render_state_text(EnvId env, const EnvState& state, bool with_hint,
                              const MazeLayout& maze) {
  return render_lines(encode_state(env, state, with_hint, maze));
}

// task-space distance used to pick the nearest policy exemplar. Features the
// hint lines make explicit (goal membership, paddle-ball relation, velocity
// zeroness) dominate the metric so states on opposite sides of a decision
// boundary never count as neighbors.
constexpr double kBoundary = 100.0;

int sign_of(int v) { return v > 0 ? 1 : v < 0 ? -1 : 0; }

double state_distance(const EnvState& a, const EnvState& b) {
  if (a.index() != b.index()) return 1e9;
  return std::visit(
      [&](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b);
        if constexpr (std::is_same_v<T, ChainState>) {
          return std::abs(x.pos - y.pos) +
                 kBoundary * (sign_of(x.pos - 4) != sign_of(y.pos - 4));
        } else if constexpr (std::is_same_v<T, DistractorChainState>) {
          // the distractor component carries no task information
          return std::abs(x.pos - y.pos) +
                 kBoundary * (sign_of(x.pos - 4) != sign_of(y.pos - 4));
        } else if constexpr (std::is_same_v<T, MazeState>) {
          return std::abs(x.x - y.x) + std::abs(x.y - y.y);
        } else if constexpr (std::is_same_v<T, MiniCatchState>) {
          return std::abs(x.paddle.x - y.paddle.x) +
                 std::abs(x.ball.x - y.ball.x) + std::abs(x.ball.y - y.ball.y) +
                 kBoundary * (sign_of(x.paddle.x - x.ball.x) !=
                              sign_of(y.paddle.x - y.ball.x));
        } else if constexpr (std::is_same_v<T, MiniInvadersState>) {
          auto aligned = [](const MiniInvadersState& s) {
            for (const auto& alien : s.aliens) {
              if (alien && alien->x == s.ship.x) return true;
            }
            return false;
          };
          double d = std::abs(x.ship.x - y.ship.x) +
                     kBoundary * (aligned(x) != aligned(y));
          for (int i = 0; i < 2; ++i) {
            if (x.aliens[i].has_value() != y.aliens[i].has_value()) {
              d += 10.0;
            } else if (x.aliens[i]) {
              d += std::abs(x.aliens[i]->x - y.aliens[i]->x) +
                   std::abs(x.aliens[i]->y - y.aliens[i]->y);
            }
          }
          return d;
        } else {
          auto region = [](double pos) { return pos < -2.0 ? -1 : pos > 2.0 ? 1 : 0; };
          return std::abs(x.pos - y.pos) + std::abs(x.vel - y.vel) +
                 kBoundary * ((region(x.pos) != region(y.pos)) +
                              ((x.vel == 0.0) != (y.vel == 0.0)));
        }
      },
      a);
}

const nlohmann::json* walk_path(const nlohmann::json& root,
                                const std::string& dot_path) {
  const nlohmann::json* node = &root;
  std::istringstream parts(dot_path);
  std::string key;
  while (std::getline(parts, key, '.')) {
    if (node->is_array()) {
      std::size_t idx = std::stoul(key);
      if (idx >= node->size()) return nullptr;
      node = &(*node)[idx];
    } else if (node->is_object() && node->contains(key)) {
      node = &(*node)[key];
    } else {
      return nullptr;
    }
  }
  return node;
}

}  // namespace

OracleBackend::OracleBackend(EnvId env, bool with_hints, MazeLayout maze)
    : env_(env), with_hints_(with_hints), maze_(std::move(maze)) {}

const std::string& OracleBackend::name() const { return kOracleName; }

std::optional<Completion> OracleBackend::complete(
    const CompletionRequest& request, Rng& rng) {
  if (request.kind == QueryKind::policy) {
    // imitate the empirical action distribution at the nearest exemplar
    // state; uniform only when the prompt holds no usable exemplar
    std::vector<ActionId> candidates;
    if (auto query = parse_state(env_, request.state_text)) {
      double best = 1e18;
      for (const auto& [text, action] : request.policy_exemplars) {
        auto s = parse_state(env_, text);
        if (!s) continue;
        double d = state_distance(*query, *s);
        if (d < best - 1e-9) {
          best = d;
          candidates.assign(1, action);
        } else if (d < best + 1e-9) {
          candidates.push_back(action);
        }
      }
      // an exemplar across a decision boundary carries no guidance for
      // the queried state, so treat the state as absent from the prompt
      if (best >= kBoundary) candidates.clear();
    }
    ActionId chosen;
    if (candidates.empty()) {
      chosen.index = std::uniform_int_distribution<int>(
          0, action_count(env_) - 1)(rng);
    } else {
      // sample from the empirical distribution sharpened by temperature;
      // temperature 0 is the deterministic mode (lowest index on count ties)
      std::vector<int> counts(action_count(env_), 0);
      for (ActionId a : candidates) counts[a.index]++;
      if (request.temperature <= 0.0) {
        chosen.index = static_cast<int>(
            std::max_element(counts.begin(), counts.end()) - counts.begin());
      } else {
        std::vector<double> weights(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i) {
          weights[i] = counts[i] == 0
                           ? 0.0
                           : std::pow(static_cast<double>(counts[i]),
                                      1.0 / request.temperature);
        }
        std::discrete_distribution<int> dist(weights.begin(), weights.end());
        chosen.index = dist(rng);
      }
    }
    return Completion{action_line(env_, chosen)};
  }
  auto state = parse_state(env_, request.state_text);
  if (!state || !request.action) return std::nullopt;
  StepResult r = step_dynamics(env_, *state, *request.action, rng, maze_);
  switch (request.kind) {
    case QueryKind::termination:
      return Completion{termination_line(r.done)};
    case QueryKind::reward:
      return Completion{reward_line(r.reward)};
    case QueryKind::next_state:
      return Completion{render_state_text(env_, r.next_state, with_hints_, maze_)};
    default:
      return std::nullopt;
  }
}

std::optional<Completion> match_lookup(const ReplayBuffer& buffer, EnvId env,
                                       const std::string& state_text,
                                       std::optional<ActionId> action,
                                       QueryKind kind, const MazeLayout& maze) {
  // the raw query text may carry a hint line; match on the state line alone
  auto query_state = parse_state(env, state_text);
  if (!query_state) return std::nullopt;
  std::string key = state_line(env, *query_state);
  for (auto it = buffer.trajectories().rbegin();
       it != buffer.trajectories().rend(); ++it) {
    for (auto jt = it->transitions.rbegin(); jt != it->transitions.rend();
         ++jt) {
      if (state_line(env, jt->obs) != key) continue;
      if (kind != QueryKind::policy && (!action || !(jt->action == *action))) {
        continue;
      }
      switch (kind) {
        case QueryKind::termination:
          return Completion{termination_line(jt->done)};
        case QueryKind::reward:
          return Completion{reward_line(jt->reward)};
        case QueryKind::next_state:
          return Completion{
              render_lines(encode_state(env, jt->next_obs, true, maze))};
        case QueryKind::policy:
          return Completion{action_line(env, jt->action)};
      }
    }
  }
  return std::nullopt;
}

MatchingBackend::MatchingBackend(const ReplayBuffer& buffer, EnvId env,
                                 MazeLayout maze)
    : buffer_(&buffer), env_(env), maze_(std::move(maze)) {}

const std::string& MatchingBackend::name() const { return kMatchingName; }

std::optional<Completion> MatchingBackend::complete(
    const CompletionRequest& request, Rng&) {
  return match_lookup(*buffer_, env_, request.state_text, request.action,
                      request.kind, maze_);
}

void RemoteConfig::apply_env() {
  auto fill = [](std::string& field, const char* var) {
    if (field.empty()) {
      if (const char* v = std::getenv(var)) field = v;
    }
  };
  fill(endpoint, "ICPI_API_URL");
  fill(api_key, "ICPI_API_KEY");
  fill(model, "ICPI_MODEL");
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("remote endpoint must be a full URL: " + url);
  }
  https_ = url.substr(0, scheme_end) == "https";
  auto path_start = url.find('/', scheme_end + 3);
  host_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

const std::string& RemoteBackend::name() const { return kRemoteName; }

std::optional<Completion> RemoteBackend::complete(
    const CompletionRequest& request, Rng&) {
  nlohmann::json body{
      {"model", config_.model},
      {"prompt", request.prompt.render()},
      {"max_tokens", request.max_new_tokens},
      {"temperature", request.temperature},
      {"stop", request.stop_sequences},
  };
  const std::string payload = body.dump();
  if (config_.debug_log) {
    std::cerr << "[remote] POST " << host_ << path_ << " body=" << payload
              << "\n";
  }

  httplib::Client client(host_);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  int delay_ms = config_.backoff_initial_ms;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms *= 2;
    }
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw std::invalid_argument("remote backend rejected credentials (HTTP " +
                                  std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;  // rate limit / transient server failure
    }
    if (res->status != 200) {
      throw BackendUnavailable("remote backend HTTP " +
                               std::to_string(res->status));
    }
    if (config_.debug_log) {
      std::cerr << "[remote] response=" << res->body << "\n";
    }
    nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
      throw BackendUnavailable("remote backend returned invalid JSON");
    }
    const nlohmann::json* text = walk_path(parsed, config_.response_text_path);
    if (!text || !text->is_string()) {
      throw BackendUnavailable("remote response missing field " +
                               config_.response_text_path);
    }
    return Completion{text->get<std::string>()};
  }
  throw BackendUnavailable("remote backend exhausted retries: " + last_error);
}

}  // namespace icpi
