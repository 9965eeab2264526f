#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dualreflect/backend.hpp"
#include "dualreflect/types.hpp"

namespace testsupport {

// Canonical fixture values shared by the golden-file and end-to-end tests.
inline constexpr const char* kSourceLang = "Chinese";
inline constexpr const char* kTargetLang = "English";
inline constexpr const char* kSourceText = "今天天气很好，我们去公园散步吧。";
inline constexpr const char* kDraftText = "The weather is nice today, let's take a walk in the park.";
inline constexpr const char* kBackText = "今天的天气不错，我们去公园走走吧。";
inline constexpr const char* kAnalysisText =
    "Analysis Results: the back-translation softens the tone of the opening clause.";
inline constexpr const char* kSuggestionsText =
    "Translation Suggestions: keep the original emphasis when revising.";

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

// Fresh scratch directory under the build tree.
inline std::string temp_dir(const std::string& tag) {
  static std::mt19937_64 rng{std::random_device{}()};
  auto path = std::filesystem::temp_directory_path() /
              ("dualreflect-" + tag + "-" + std::to_string(rng()));
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path.string();
}

inline dualreflect::TranslationTask make_task(std::string id = "t1") {
  dualreflect::TranslationTask task;
  task.id = std::move(id);
  task.source_text = kSourceText;
  task.source_lang = kSourceLang;
  task.target_lang = kTargetLang;
  task.reference = kDraftText;
  return task;
}

// Stage-routed script for a run whose judgment converges after
// `continue_rounds` "True" verdicts (drafts[i] is the revision produced in
// round i+1).
inline std::vector<dualreflect::ScriptedRule> converge_script(
    int continue_rounds, const std::vector<std::string>& revisions = {},
    bool script_intermediate_extracts = false) {
  using dualreflect::MatchKind;
  using dualreflect::ScriptedRule;
  std::vector<ScriptedRule> rules;
  rules.push_back({MatchKind::StageLabel, "Draft", {kDraftText}});
  rules.push_back(
      {MatchKind::StageLabel, "Back", std::vector<std::string>(continue_rounds + 1, kBackText)});
  std::vector<std::string> verdicts;
  for (int i = 0; i < continue_rounds; ++i) {
    verdicts.push_back("True. Round " + std::to_string(i + 1) + " still differs.");
  }
  verdicts.push_back("False");
  rules.push_back({MatchKind::StageLabel, "Judge", verdicts});
  if (continue_rounds > 0) {
    rules.push_back({MatchKind::StageLabel, "Reflect",
                     std::vector<std::string>(
                         continue_rounds, std::string(kAnalysisText) + "\n" + kSuggestionsText)});
    std::vector<std::string> revision_queue = revisions;
    while (static_cast<int>(revision_queue.size()) < continue_rounds) {
      revision_queue.push_back("Revised draft " + std::to_string(revision_queue.size() + 1));
    }
    rules.push_back({MatchKind::StageLabel, "Revise", revision_queue});
  }
  int extract_calls = script_intermediate_extracts ? continue_rounds + 1 : 1;
  rules.push_back({MatchKind::StageLabel, "Extract",
                   std::vector<std::string>(
                       extract_calls, std::string("{\"final_translation\": \"") + kDraftText +
                                          "\"}")});
  return rules;
}

}  // namespace testsupport
