#pragma once

// Sequence-model abstraction and its three backends: a remote completions
// API client, the nearest-neighbor matching model, and a ground-truth
// oracle used for verification runs.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "icpi/replay.hpp"
#include "icpi/textcodec.hpp"

namespace icpi {

struct CompletionRequest {
  Prompt prompt;
  int max_new_tokens = 64;
  double temperature = 0.1;
  std::vector<std::string> stop_sequences = {"\n"};

  // Structured view of the query, for backends that do not read text. The
  // state text is whatever the previous completion produced (rollouts chain
  // on raw text); backends parse it best-effort.
  QueryKind kind = QueryKind::termination;
  EnvId env = EnvId::chain;
  std::string state_text;
  std::optional<ActionId> action;  // dynamics queries only
  // (state text, action) pairs shown in a policy prompt, in prompt order.
  std::vector<std::pair<std::string, ActionId>> policy_exemplars;
};

struct Completion {
  std::string raw;
};

struct BackendUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// nullopt means the backend cannot answer (e.g. matching-model miss); the
// caller ends the simulated rollout.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::optional<Completion> complete(const CompletionRequest& request,
                                             Rng& rng) = 0;
  virtual const std::string& name() const = 0;
};

// Answers dynamics queries from the true environment dynamics and action
// queries by imitating the empirical action distribution at the queried
// state's nearest exemplars under a task-space metric. With no exemplars,
// or none on the queried state's side of a decision boundary, the action
// is uniform over the action space.
class OracleBackend : public Backend {
 public:
  OracleBackend(EnvId env, bool with_hints = true, MazeLayout maze = {});
  std::optional<Completion> complete(const CompletionRequest& request,
                                     Rng& rng) override;
  const std::string& name() const override;

 private:
  EnvId env_;
  bool with_hints_;
  MazeLayout maze_;
};

// Scans the buffer from most recent to oldest for an exact encoded-state
// match (plus action match for dynamics queries) and replays the recorded
// value. A miss returns nullopt.
std::optional<Completion> match_lookup(const ReplayBuffer& buffer, EnvId env,
                                       const std::string& state_text,
                                       std::optional<ActionId> action,
                                       QueryKind kind,
                                       const MazeLayout& maze = {});

class MatchingBackend : public Backend {
 public:
  // buffer must outlive the backend
  MatchingBackend(const ReplayBuffer& buffer, EnvId env, MazeLayout maze = {});
  std::optional<Completion> complete(const CompletionRequest& request,
                                     Rng& rng) override;
  const std::string& name() const override;

 private:
  const ReplayBuffer* buffer_;
  EnvId env_;
  MazeLayout maze_;
};

struct RemoteConfig {
  std::string endpoint;         // e.g. https://host/v1/completions
  std::string api_key;          // sent as a bearer token when non-empty
  std::string model;
  std::string response_text_path = "choices.0.text";  // dot path into the JSON
  int max_retries = 5;
  int backoff_initial_ms = 500;  // doubled per retry
  bool debug_log = false;        // logs bodies to stderr, credentials redacted

  // Fills endpoint/api_key/model from ICPI_API_URL, ICPI_API_KEY,
  // ICPI_MODEL where unset.
  void apply_env();
};

// Minimal completions-style HTTP client with retry/backoff. Throws
// BackendUnavailable once retries are exhausted and std::invalid_argument
// on a malformed endpoint.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  std::optional<Completion> complete(const CompletionRequest& request,
                                     Rng& rng) override;
  const std::string& name() const override;

 private:
  RemoteConfig config_;
  std::string host_;
  std::string path_;
  bool https_ = false;
};

using BackendPtr = std::unique_ptr<Backend>;

}  // namespace icpi
