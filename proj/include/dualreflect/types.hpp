#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dualreflect {

enum class Role { System, User };

struct Message {
  Role role = Role::User;
  std::string content;

  bool operator==(const Message&) const = default;
};

// Ordered chat messages as sent to a backend. Always ends with at least
// one User message when produced by the prompt renderers.
using MessageSequence = std::vector<Message>;

// Stage labels as they appear in transcripts.
enum class Stage { Draft, Back, Judge, Reflect, Revise, Extract };

const char* to_string(Stage stage);
const char* to_string(Role role);
std::optional<Stage> stage_from_string(std::string_view name);
std::optional<Role> role_from_string(std::string_view name);

// One source segment with its language pair and optional gold reference.
struct TranslationTask {
  std::string id;
  std::string source_text;
  std::string source_lang;
  std::string target_lang;
  std::optional<std::string> reference;
};

// Throws ValidationError unless source_text is non-empty after trimming
// and the language pair is distinct and non-empty.
void validate_task(const TranslationTask& task);

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

struct RunConfig {
  std::string backend_id = "http";
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_iterations = 3;
  bool force_extraction_each_iteration = false;
  std::string metric = "chrf";

  // No cap / no stop sequences unless configured.
  std::optional<int> max_output_tokens;
  std::vector<std::string> stop_sequences;

  // Re-issue one extraction call before falling back to the raw draft.
  bool reask_on_extraction_failure = false;
};

// Throws ValidationError on non-positive max_iterations or negative temperature.
void validate_config(const RunConfig& config);

std::string trim_copy(std::string_view text);

}  // namespace dualreflect
