#include "dualreflect/prompts.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dualreflect/error.hpp"

namespace dualreflect {
namespace {

constexpr const char* kTranslateInstruction =
    "Translate the following text from {source_lang} to {target_lang}:";

constexpr const char* kJudgmentInstruction =
    "If you are a {source_lang} linguist, Determine whether the following two sentences "
    "provided by user convey the same meaning and style, including subtleties. If so, give "
    "'False' response without any explanation, otherwise give 'True' response and explain "
    "the reason.";

constexpr const char* kExtractionInstruction =
    "Therefore, Pattern Extraction: Please summarize the input information, you need to "
    "extract the final translation result from the paragraph. Now, please output your answer "
    "in JSON format, as follows: {'final_translation': ''}. Please strictly follow the JSON "
    "format and do not output irrelevant content.";

constexpr const char* kReflectionInstruction =
    "Compare the the two sentences provided by the user. It aims to analyze the disparities "
    "between them in meaning, style, and subtleties, first provide analytical results, and "
    "then suggest how to revise them to make the two sentences consistent.";

constexpr const char* kTranslateInput = "<<<\n{x}\n>>>";

constexpr const char* kJudgmentInput =
    "Source Sentence:\n<<<\n{x}\n>>>\nBack Translation Output:\n<<<\n{x_prime}\n>>>";

constexpr const char* kExtractionInput = "<<<\n{y}\n>>>";

constexpr const char* kReflectionInput =
    "Sentence 1:\n<<<\n{x_prime}\n>>>\nSentence 2:\n<<<\n{x}\n>>>";

constexpr const char* kRevisionInput =
    "Analysis Results:\n<<<\n{AR}\n>>>\nTranslation Suggestions:\n<<<\n{TS}\n>>>\n"
    "Source Sentence:\n<<<\n{x}\n>>>";

bool is_placeholder_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_placeholder_char(char c) {
  return is_placeholder_start(c) || (c >= '0' && c <= '9');
}

void require_non_empty(const std::string& value, const char* what) {
  if (trim_copy(value).empty()) {
    throw RenderError(std::string("render input '") + what + "' is empty");
  }
}

MessageSequence render_stage(const StageTemplate& tmpl,
                             const std::map<std::string, std::string>& bindings) {
  return {
      {Role::System, substitute_placeholders(tmpl.system, bindings)},
      {Role::User, substitute_placeholders(tmpl.user, bindings)},
  };
}

void apply_override(StageTemplate& target, const nlohmann::json& doc, const std::string& key) {
  if (!doc.contains(key)) return;
  const auto& node = doc.at(key);
  if (!node.is_object()) {
    throw ScriptError("template override '" + key + "' must be an object");
  }
  for (const auto& item : node.items()) {
    if (item.key() == "system") {
      target.system = item.value().get<std::string>();
    } else if (item.key() == "user") {
      target.user = item.value().get<std::string>();
    } else {
      throw ScriptError("template override '" + key + "' has unknown field '" + item.key() +
                        "'");
    }
  }
}

}  // namespace

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet instance{
      /*draft=*/{kTranslateInstruction, kTranslateInput},
      /*back=*/{kTranslateInstruction, kTranslateInput},
      /*judgment=*/{kJudgmentInstruction, kJudgmentInput},
      /*extraction=*/{kExtractionInstruction, kExtractionInput},
      /*reflection=*/{kReflectionInstruction, kReflectionInput},
      /*revision=*/{kTranslateInstruction, kRevisionInput},
  };
  return instance;
}

std::string substitute_placeholders(std::string_view tmpl,
                                    const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    char c = tmpl[i];
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    // A placeholder is '{' name '}' with an identifier name; anything else,
    // like the {'final_translation': ''} exemplar, stays literal.
    std::size_t j = i + 1;
    if (j < tmpl.size() && is_placeholder_start(tmpl[j])) {
      std::size_t k = j;
      while (k < tmpl.size() && is_placeholder_char(tmpl[k])) ++k;
      if (k < tmpl.size() && tmpl[k] == '}') {
        std::string name(tmpl.substr(j, k - j));
        auto found = bindings.find(name);
        if (found == bindings.end()) {
          throw RenderError("unbound placeholder '{" + name + "}'");
        }
        out += found->second;
        i = k + 1;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

TemplateSet templates_from_json_text(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ScriptError("template file must be a JSON object keyed by stage name");
  }
  static const char* kKnown[] = {"draft", "back", "judgment", "extraction", "reflection",
                                 "revision"};
  for (const auto& item : doc.items()) {
    bool known = false;
    for (const char* key : kKnown) known = known || item.key() == key;
    if (!known) {
      throw ScriptError("template file has unknown stage key '" + item.key() + "'");
    }
  }
  TemplateSet set = TemplateSet::builtin();
  apply_override(set.draft, doc, "draft");
  apply_override(set.back, doc, "back");
  apply_override(set.judgment, doc, "judgment");
  apply_override(set.extraction, doc, "extraction");
  apply_override(set.reflection, doc, "reflection");
  apply_override(set.revision, doc, "revision");
  return set;
}

TemplateSet load_templates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ScriptError("cannot open template file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return templates_from_json_text(buffer.str());
}

MessageSequence render_draft(const std::string& x, const std::string& source_lang,
                             const std::string& target_lang, const TemplateSet& templates) {
  require_non_empty(x, "x");
  require_non_empty(source_lang, "source_lang");
  require_non_empty(target_lang, "target_lang");
  return render_stage(templates.draft,
                      {{"x", x}, {"source_lang", source_lang}, {"target_lang", target_lang}});
}

MessageSequence render_back(const std::string& y, const std::string& target_lang,
                            const std::string& source_lang, const TemplateSet& templates) {
  require_non_empty(y, "y");
  require_non_empty(source_lang, "source_lang");
  require_non_empty(target_lang, "target_lang");
  // Direction reversed: the draft is translated back, target -> source.
  return render_stage(templates.back,
                      {{"x", y}, {"source_lang", target_lang}, {"target_lang", source_lang}});
}

MessageSequence render_judgment(const std::string& x, const std::string& x_prime,
                                const std::string& source_lang, const TemplateSet& templates) {
  require_non_empty(x, "x");
  require_non_empty(x_prime, "x_prime");
  require_non_empty(source_lang, "source_lang");
  return render_stage(templates.judgment,
                      {{"x", x}, {"x_prime", x_prime}, {"source_lang", source_lang}});
}

MessageSequence render_extraction(const std::string& y, const TemplateSet& templates) {
  require_non_empty(y, "y");
  return render_stage(templates.extraction, {{"y", y}});
}

MessageSequence render_reflection(const std::string& x_prime, const std::string& x,
                                  const TemplateSet& templates) {
  require_non_empty(x_prime, "x_prime");
  require_non_empty(x, "x");
  return render_stage(templates.reflection, {{"x_prime", x_prime}, {"x", x}});
}

MessageSequence render_revision(const std::string& analysis, const std::string& suggestions,
                                const std::string& x, const std::string& source_lang,
                                const std::string& target_lang, const TemplateSet& templates) {
  require_non_empty(x, "x");
  require_non_empty(source_lang, "source_lang");
  require_non_empty(target_lang, "target_lang");
  return render_stage(templates.revision, {{"AR", analysis},
                                           {"TS", suggestions},
                                           {"x", x},
                                           {"source_lang", source_lang},
                                           {"target_lang", target_lang}});
}

std::string to_prompt_text(const MessageSequence& messages) {
  std::string out;
  for (const Message& message : messages) {
    out += "[";
    out += to_string(message.role);
    out += "]\n";
    out += message.content;
    out += "\n";
  }
  return out;
}

}  // namespace dualreflect
