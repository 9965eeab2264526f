#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dualreflect/error.hpp"
#include "dualreflect/types.hpp"

namespace dualreflect {

struct ChatRequest {
  std::string model;
  MessageSequence messages;
  double temperature = 0.0;
  std::optional<int> max_output_tokens;
  std::vector<std::string> stop_sequences;
  // Routing hint for scripted backends; never sent on the wire.
  std::string stage_label;
};

struct ChatResponse {
  std::string content;  // present even when the model replied with ""
  TokenUsage usage;
  std::chrono::milliseconds latency{0};
  int attempts = 1;
};

// Chat-completion provider. Implementations must tolerate concurrent
// complete() calls from many pipeline runs.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Exponential backoff with full jitter, capped per attempt.
struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{60000};

  // Upper bound of the jitter window before attempt `attempt` (1-based retry index).
  std::chrono::milliseconds backoff_ceiling(int attempt) const;
  std::chrono::milliseconds delay(int attempt, std::mt19937& rng) const;
};

struct HttpBackendConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::chrono::milliseconds timeout{120000};
  RetryPolicy retry;
  int max_in_flight = 0;  // 0 = unlimited
  // Logs request metadata (endpoint, status, attempt) to stderr.
  // Message contents are never logged at any verbosity.
  bool verbose = false;
};

// OpenAI-compatible wire client: POST {base_url}/chat/completions with
// bearer auth. Retries transport errors, 429 and 5xx per the policy;
// other 4xx fail immediately.
std::unique_ptr<Backend> make_http_backend(HttpBackendConfig config);

enum class MatchKind { ExactPrompt, ContainsSubstring, StageLabel };

struct ScriptedRule {
  MatchKind matcher = MatchKind::ContainsSubstring;
  std::string pattern;
  std::vector<std::string> responses;  // consumed front to back, one per match
};

// Deterministic fake provider: rules are tried in declaration order against
// the flattened prompt text (or stage label) and the first match pops the
// next queued response. An exhausted queue or an unmatched request throws
// ScriptError so under-specified fixtures fail loudly.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<ScriptedRule> rules);

  ChatResponse complete(const ChatRequest& request) override;

  int calls() const;

 private:
  struct RuleState {
    ScriptedRule rule;
    std::size_t consumed = 0;
  };

  mutable std::mutex mutex_;
  std::vector<RuleState> rules_;
  int calls_ = 0;
};

// Script file: a JSON array of {"match": "exact"|"contains"|"stage",
// "pattern": string, "responses": [string, ...]} in declaration order.
std::vector<ScriptedRule> load_script(const std::string& path);
std::vector<ScriptedRule> script_from_json_text(const std::string& text);
std::unique_ptr<Backend> script_from_file(const std::string& path);

}  // namespace dualreflect
