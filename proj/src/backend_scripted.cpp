#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dualreflect/backend.hpp"
#include "dualreflect/prompts.hpp"

namespace dualreflect {
namespace {

const char* to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::ExactPrompt:
      return "exact";
    case MatchKind::ContainsSubstring:
      return "contains";
    case MatchKind::StageLabel:
      return "stage";
  }
  return "unknown";
}

MatchKind match_kind_from_string(const std::string& name) {
  if (name == "exact") return MatchKind::ExactPrompt;
  if (name == "contains") return MatchKind::ContainsSubstring;
  if (name == "stage") return MatchKind::StageLabel;
  throw ScriptError("unknown matcher '" + name + "' (expected exact|contains|stage)");
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::vector<ScriptedRule> rules) {
  if (rules.empty()) {
    throw ScriptError("scripted backend needs at least one rule");
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].responses.empty()) {
      throw ScriptError("rule #" + std::to_string(i) + " ('" + rules[i].pattern +
                        "') has an empty response queue");
    }
    rules_.push_back({std::move(rules[i]), 0});
  }
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  const std::string prompt = to_prompt_text(request.messages);
  std::lock_guard<std::mutex> lock(mutex_);
  ++calls_;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    RuleState& state = rules_[i];
    bool matches = false;
    switch (state.rule.matcher) {
      case MatchKind::ExactPrompt:
        matches = prompt == state.rule.pattern;
        break;
      case MatchKind::ContainsSubstring:
        matches = prompt.find(state.rule.pattern) != std::string::npos;
        break;
      case MatchKind::StageLabel:
        matches = request.stage_label == state.rule.pattern;
        break;
    }
    if (!matches) continue;
    if (state.consumed >= state.rule.responses.size()) {
      throw ScriptError("rule #" + std::to_string(i) + " (" + to_string(state.rule.matcher) +
                        " '" + state.rule.pattern + "') exhausted after " +
                        std::to_string(state.rule.responses.size()) + " responses");
    }
    ChatResponse response;
    response.content = state.rule.responses[state.consumed++];
    return response;
  }
  throw ScriptError("no scripted rule matches request (stage '" + request.stage_label + "')");
}

int ScriptedBackend::calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return calls_;
}

std::vector<ScriptedRule> script_from_json_text(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw ScriptError("script must be a JSON array of rules");
  }
  if (doc.empty()) {
    throw ScriptError("script has no rules");
  }
  std::vector<ScriptedRule> rules;
  for (const auto& node : doc) {
    if (!node.is_object() || !node.contains("match") || !node.contains("pattern") ||
        !node.contains("responses")) {
      throw ScriptError("each rule needs match, pattern and responses fields");
    }
    ScriptedRule rule;
    rule.matcher = match_kind_from_string(node.at("match").get<std::string>());
    rule.pattern = node.at("pattern").get<std::string>();
    if (!node.at("responses").is_array() || node.at("responses").empty()) {
      throw ScriptError("rule '" + rule.pattern + "': responses must be a non-empty array");
    }
    for (const auto& response : node.at("responses")) {
      if (!response.is_string()) {
        throw ScriptError("rule '" + rule.pattern + "': responses must be strings");
      }
      rule.responses.push_back(response.get<std::string>());
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<ScriptedRule> load_script(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ScriptError("cannot open script file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return script_from_json_text(buffer.str());
}

std::unique_ptr<Backend> script_from_file(const std::string& path) {
  return std::make_unique<ScriptedBackend>(load_script(path));
}

}  // namespace dualreflect
