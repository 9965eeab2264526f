#include "dualreflect/types.hpp"

#include <cctype>

#include "dualreflect/error.hpp"

namespace dualreflect {

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::Draft:
      return "Draft";
    case Stage::Back:
      return "Back";
    case Stage::Judge:
      return "Judge";
    case Stage::Reflect:
      return "Reflect";
    case Stage::Revise:
      return "Revise";
    case Stage::Extract:
      return "Extract";
  }
  return "Unknown";
}

const char* to_string(Role role) {
  return role == Role::System ? "system" : "user";
}

std::optional<Stage> stage_from_string(std::string_view name) {
  if (name == "Draft") return Stage::Draft;
  if (name == "Back") return Stage::Back;
  if (name == "Judge") return Stage::Judge;
  if (name == "Reflect") return Stage::Reflect;
  if (name == "Revise") return Stage::Revise;
  if (name == "Extract") return Stage::Extract;
  return std::nullopt;
}

std::optional<Role> role_from_string(std::string_view name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  return std::nullopt;
}

std::string trim_copy(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

void validate_task(const TranslationTask& task) {
  if (trim_copy(task.source_text).empty()) {
    throw ValidationError("task '" + task.id + "': source_text is empty");
  }
  if (trim_copy(task.source_lang).empty() || trim_copy(task.target_lang).empty()) {
    throw ValidationError("task '" + task.id + "': language names must be non-empty");
  }
  if (task.source_lang == task.target_lang) {
    throw ValidationError("task '" + task.id + "': source_lang equals target_lang (" +
                          task.source_lang + ")");
  }
}

void validate_config(const RunConfig& config) {
  if (config.max_iterations < 1) {
    throw ValidationError("max_iterations must be >= 1");
  }
  if (config.temperature < 0.0) {
    throw ValidationError("temperature must be >= 0");
  }
  if (config.max_output_tokens && *config.max_output_tokens <= 0) {
    throw ValidationError("max_output_tokens must be positive when set");
  }
}

}  // namespace dualreflect
