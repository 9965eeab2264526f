#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "dualreflect/error.hpp"
#include "dualreflect/prompts.hpp"
#include "test_support.hpp"

using namespace dualreflect;
using namespace testsupport;

namespace {

std::string golden_path(const char* name) {
  return std::string(DR_GOLDEN_DIR) + "/" + name + ".golden.txt";
}

void check_against_golden(const char* name, const MessageSequence& rendered) {
  const std::string text = to_prompt_text(rendered);
  const std::string path = golden_path(name);
  if (std::getenv("DR_UPDATE_GOLDENS")) {
    write_file(path, text);
  }
  INFO("golden file: ", path);
  REQUIRE(std::filesystem::exists(path));
  CHECK(text == read_file(path));
}

}  // namespace

TEST_CASE("golden renders for all six templates") {
  check_against_golden("draft", render_draft(kSourceText, kSourceLang, kTargetLang));
  check_against_golden("back", render_back(kDraftText, kTargetLang, kSourceLang));
  check_against_golden("judgment", render_judgment(kSourceText, kBackText, kSourceLang));
  check_against_golden("extraction", render_extraction(kDraftText));
  check_against_golden("reflection", render_reflection(kBackText, kSourceText));
  check_against_golden("revision", render_revision(kAnalysisText, kSuggestionsText, kSourceText,
                                                   kSourceLang, kTargetLang));
}

TEST_CASE("draft instruction names both languages and carries x verbatim") {
  auto messages = render_draft("你好", "Chinese", "English");
  REQUIRE(messages.size() == 2);
  CHECK(messages[0].role == Role::System);
  CHECK(messages[0].content == "Translate the following text from Chinese to English:");
  CHECK(messages[1].role == Role::User);
  CHECK(messages[1].content.find("你好") != std::string::npos);
}

TEST_CASE("back render reuses the draft template byte-for-byte") {
  auto back = render_back("Hello", "English", "Chinese");
  auto draft = render_draft("Hello", "English", "Chinese");
  CHECK(to_prompt_text(back) == to_prompt_text(draft));
  CHECK(back[0].content == "Translate the following text from English to Chinese:");
}

TEST_CASE("judgment prompt carries the True/False protocol and both sentences") {
  auto messages = render_judgment("源句", "回译句", "Chinese");
  const std::string text = to_prompt_text(messages);
  CHECK(text.find("If you are a Chinese linguist") != std::string::npos);
  CHECK(text.find("give 'False' response without any explanation, otherwise give 'True' "
                  "response and explain the reason") != std::string::npos);
  CHECK(text.find("源句") != std::string::npos);
  CHECK(text.find("回译句") != std::string::npos);
  // Identical sentences are still the judge's call, not the renderer's.
  CHECK_NOTHROW(render_judgment("same", "same", "Chinese"));
}

TEST_CASE("extraction prompt keeps the single-quoted exemplar literally") {
  auto messages = render_extraction("The cat sat.");
  const std::string text = to_prompt_text(messages);
  CHECK(text.find("{'final_translation': ''}") != std::string::npos);
  CHECK(text.find("Please strictly follow the JSON format") != std::string::npos);
  CHECK(text.find("The cat sat.") != std::string::npos);
}

TEST_CASE("extraction input with braces is preserved verbatim") {
  auto messages = render_extraction("object {\"k\": 1} inline");
  CHECK(messages[1].content.find("object {\"k\": 1} inline") != std::string::npos);
}

TEST_CASE("reflection presents x_prime before x") {
  auto messages = render_reflection("BACKTEXT", "SOURCETEXT");
  const std::string& user = messages[1].content;
  auto prime_pos = user.find("BACKTEXT");
  auto source_pos = user.find("SOURCETEXT");
  REQUIRE(prime_pos != std::string::npos);
  REQUIRE(source_pos != std::string::npos);
  CHECK(prime_pos < source_pos);
  CHECK(to_prompt_text(messages).find("first provide analytical results, and then suggest "
                                      "how to revise") != std::string::npos);
  CHECK_NOTHROW(render_reflection("same", "same"));
}

TEST_CASE("revision lays out AR, TS, then x last") {
  auto messages = render_revision("AR-BLOCK", "TS-BLOCK", "X-BLOCK", "Chinese", "English");
  const std::string& user = messages[1].content;
  auto ar = user.find("AR-BLOCK");
  auto ts = user.find("TS-BLOCK");
  auto x = user.find("X-BLOCK");
  REQUIRE(ar != std::string::npos);
  REQUIRE(ts != std::string::npos);
  REQUIRE(x != std::string::npos);
  CHECK(ar < ts);
  CHECK(ts < x);
  CHECK(messages[0].content == "Translate the following text from Chinese to English:");
}

TEST_CASE("revision tolerates empty AR and TS") {
  auto messages = render_revision("", "", "x-text", "Chinese", "English");
  CHECK(messages[1].content.find("Analysis Results:") != std::string::npos);
  CHECK(messages[1].content.find("x-text") != std::string::npos);
}

TEST_CASE("renderers reject empty required inputs") {
  CHECK_THROWS_AS(render_draft("", "Chinese", "English"), RenderError);
  CHECK_THROWS_AS(render_draft("x", "", "English"), RenderError);
  CHECK_THROWS_AS(render_draft("x", "Chinese", ""), RenderError);
  CHECK_THROWS_AS(render_back("", "English", "Chinese"), RenderError);
  CHECK_THROWS_AS(render_judgment("x", "", "Chinese"), RenderError);
  CHECK_THROWS_AS(render_extraction(""), RenderError);
  CHECK_THROWS_AS(render_reflection("x'", ""), RenderError);
  CHECK_THROWS_AS(render_revision("AR", "TS", "", "Chinese", "English"), RenderError);
}

TEST_CASE("renderer is policy-free about equal language names") {
  CHECK_NOTHROW(render_draft("a", "X", "X"));
}

TEST_CASE("substitution is single-pass") {
  auto messages = render_draft("literal {x} stays put", "Chinese", "English");
  const std::string& user = messages[1].content;
  std::size_t count = 0;
  for (std::size_t pos = user.find("{x}"); pos != std::string::npos;
       pos = user.find("{x}", pos + 1)) {
    ++count;
  }
  CHECK(count == 1);
  CHECK(user.find("literal {x} stays put") != std::string::npos);
}

TEST_CASE("substitute_placeholders errors on unbound names, ignores non-identifiers") {
  CHECK_THROWS_AS(substitute_placeholders("hello {nope}", {{"x", "1"}}), RenderError);
  CHECK(substitute_placeholders("{'final_translation': ''}", {}) ==
        "{'final_translation': ''}");
  CHECK(substitute_placeholders("{x} and {x}", {{"x", "v"}}) == "v and v");
  CHECK(substitute_placeholders("{ x}", {}) == "{ x}");
  CHECK(substitute_placeholders("tail {", {}) == "tail {");
}

TEST_CASE("rendering is pure: repeated renders are byte-identical") {
  auto a = render_revision(kAnalysisText, kSuggestionsText, kSourceText, kSourceLang,
                           kTargetLang);
  auto b = render_revision(kAnalysisText, kSuggestionsText, kSourceText, kSourceLang,
                           kTargetLang);
  CHECK(to_prompt_text(a) == to_prompt_text(b));
}

TEST_CASE("template overrides replace only the named stages") {
  const std::string dir = temp_dir("templates");
  const std::string path = dir + "/overrides.json";
  write_file(path, R"({"judgment": {"system": "Custom judge for {source_lang}."}})");
  TemplateSet set = load_templates(path);
  auto judgment = render_judgment("x", "x'", "Chinese", set);
  CHECK(judgment[0].content == "Custom judge for Chinese.");
  // User part of judgment and every other stage keep the defaults.
  auto builtin_judgment = render_judgment("x", "x'", "Chinese");
  CHECK(judgment[1].content == builtin_judgment[1].content);
  CHECK(to_prompt_text(render_draft("x", "A", "B", set)) ==
        to_prompt_text(render_draft("x", "A", "B")));
}

TEST_CASE("template override schema violations are rejected") {
  CHECK_THROWS_AS(templates_from_json_text("[]"), ScriptError);
  CHECK_THROWS_AS(templates_from_json_text(R"({"draught": {}})"), ScriptError);
  CHECK_THROWS_AS(templates_from_json_text(R"({"draft": {"sistem": "x"}})"), ScriptError);
  CHECK_THROWS_AS(load_templates("/nonexistent/templates.json"), ScriptError);
}
