#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dualreflect/backend.hpp"

namespace dualreflect {
namespace {

using Clock = std::chrono::steady_clock;

struct ParsedUrl {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // e.g. /v1, no trailing slash
};

ParsedUrl parse_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("base_url must include a scheme: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl parsed;
  if (path_start == std::string::npos) {
    parsed.origin = base_url;
  } else {
    parsed.origin = base_url.substr(0, path_start);
    parsed.path_prefix = base_url.substr(path_start);
  }
  while (!parsed.path_prefix.empty() && parsed.path_prefix.back() == '/') {
    parsed.path_prefix.pop_back();
  }
  return parsed;
}

nlohmann::json request_body(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const Message& message : request.messages) {
    messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
  }
  nlohmann::json body = {
      {"model", request.model},
      {"messages", std::move(messages)},
      {"temperature", request.temperature},
  };
  if (request.max_output_tokens) {
    body["max_tokens"] = *request.max_output_tokens;
  }
  if (!request.stop_sequences.empty()) {
    body["stop"] = request.stop_sequences;
  }
  return body;
}

ChatResponse parse_response_body(const std::string& body, int attempts) {
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw BackendError(BackendError::Kind::MalformedResponse,
                       "response body is not a JSON object", 200, attempts);
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw BackendError(BackendError::Kind::MalformedResponse, "response has no choices", 200,
                       attempts);
  }
  const auto& first = choices->front();
  if (!first.contains("message") || !first.at("message").contains("content") ||
      !first.at("message").at("content").is_string()) {
    throw BackendError(BackendError::Kind::MalformedResponse,
                       "response choice has no message content", 200, attempts);
  }
  ChatResponse response;
  response.content = first.at("message").at("content").get<std::string>();
  if (doc.contains("usage") && doc.at("usage").is_object()) {
    const auto& usage = doc.at("usage");
    response.usage.prompt_tokens = usage.value("prompt_tokens", 0);
    response.usage.completion_tokens = usage.value("completion_tokens", 0);
  }
  response.attempts = attempts;
  return response;
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config)
      : config_(std::move(config)),
        url_(parse_base_url(config_.base_url)),
        permits_(config_.max_in_flight > 0 ? config_.max_in_flight
                                           : std::numeric_limits<int>::max()) {}

  ChatResponse complete(const ChatRequest& request) override {
    permits_.acquire();
    try {
      ChatResponse response = complete_with_retries(request);
      permits_.release();
      return response;
    } catch (...) {
      permits_.release();
      throw;
    }
  }

 private:
  ChatResponse complete_with_retries(const ChatRequest& request) {
    const std::string path = url_.path_prefix + "/chat/completions";
    const std::string body = request_body(request).dump();
    const auto started = Clock::now();

    std::string last_error;
    BackendError::Kind last_kind = BackendError::Kind::Transport;
    int last_status = 0;

    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(config_.retry.delay(attempt - 1, rng()));
      }
      httplib::Client client(url_.origin);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      if (!config_.api_key.empty()) {
        client.set_bearer_token_auth(config_.api_key);
      }

      auto result = client.Post(path, body, "application/json");
      if (!result) {
        last_kind = BackendError::Kind::Transport;
        last_status = 0;
        last_error = "transport error: " + httplib::to_string(result.error());
        log_attempt(attempt, 0, "transport error");
        continue;
      }
      const int status = result->status;
      if (status == 200) {
        ChatResponse response = parse_response_body(result->body, attempt);
        response.latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);
        log_attempt(attempt, status, "ok");
        return response;
      }
      if (status == 429) {
        last_kind = BackendError::Kind::RateLimited;
        last_status = status;
        last_error = "rate limited (429)";
        log_attempt(attempt, status, "rate limited");
        continue;
      }
      if (status >= 500) {
        last_kind = BackendError::Kind::Transport;
        last_status = status;
        last_error = "server error (" + std::to_string(status) + ")";
        log_attempt(attempt, status, "server error");
        continue;
      }
      // Remaining 4xx are not transient; do not retry.
      log_attempt(attempt, status, "client error");
      throw BackendError(BackendError::Kind::BadRequest,
                         "request rejected (" + std::to_string(status) + ")", status, attempt);
    }
    throw BackendError(last_kind, last_error + " after " +
                           std::to_string(config_.retry.max_attempts) + " attempts",
                       last_status, config_.retry.max_attempts);
  }

  void log_attempt(int attempt, int status, const char* note) const {
    if (!config_.verbose) return;
    // Metadata only; message contents stay private.
    std::fprintf(stderr, "[http] POST %s/chat/completions attempt=%d/%d status=%d %s\n",
                 url_.path_prefix.c_str(), attempt, config_.retry.max_attempts, status, note);
  }

  static std::mt19937& rng() {
    thread_local std::mt19937 engine{std::random_device{}()};
    return engine;
  }

  HttpBackendConfig config_;
  ParsedUrl url_;
  std::counting_semaphore<std::numeric_limits<int>::max()> permits_;
};

}  // namespace

std::chrono::milliseconds RetryPolicy::backoff_ceiling(int attempt) const {
  double ceiling = static_cast<double>(initial_backoff.count());
  for (int i = 1; i < attempt; ++i) {
    ceiling *= multiplier;
    if (ceiling >= static_cast<double>(max_backoff.count())) {
      return max_backoff;
    }
  }
  return std::chrono::milliseconds(
      std::min<long long>(static_cast<long long>(ceiling), max_backoff.count()));
}

std::chrono::milliseconds RetryPolicy::delay(int attempt, std::mt19937& rng) const {
  const auto ceiling = backoff_ceiling(attempt);
  if (ceiling.count() <= 0) return std::chrono::milliseconds(0);
  std::uniform_int_distribution<long long> jitter(0, ceiling.count());
  return std::chrono::milliseconds(jitter(rng));
}

std::unique_ptr<Backend> make_http_backend(HttpBackendConfig config) {
  return std::make_unique<HttpBackend>(std::move(config));
}

}  // namespace dualreflect
