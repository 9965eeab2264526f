#pragma once

#include <map>
#include <string>

#include "dualreflect/types.hpp"

namespace dualreflect {

// Instruction text (System message) plus an input layout (User message).
// Placeholders use {name} syntax where name is [A-Za-z_][A-Za-z0-9_]*;
// any other brace sequence is literal text.
struct StageTemplate {
  std::string system;
  std::string user;
};

struct TemplateSet {
  StageTemplate draft;
  StageTemplate back;
  StageTemplate judgment;
  StageTemplate extraction;
  StageTemplate reflection;
  StageTemplate revision;

  static const TemplateSet& builtin();
};

// Loads overrides from a UTF-8 JSON document keyed by stage name
// ("draft", "back", "judgment", "extraction", "reflection", "revision"),
// each an object with optional "system" / "user" fields. Absent keys and
// fields keep the built-in defaults. Throws ScriptError on schema problems.
TemplateSet load_templates(const std::string& path);
TemplateSet templates_from_json_text(const std::string& text);

// Single-pass substitution: placeholders in the template are replaced by
// their bound values; placeholder-like substrings inside the values are
// never expanded. Unbound placeholders throw RenderError.
std::string substitute_placeholders(std::string_view tmpl,
                                    const std::map<std::string, std::string>& bindings);

MessageSequence render_draft(const std::string& x, const std::string& source_lang,
                             const std::string& target_lang,
                             const TemplateSet& templates = TemplateSet::builtin());

// Same template as the draft stage with the language direction reversed.
MessageSequence render_back(const std::string& y, const std::string& target_lang,
                            const std::string& source_lang,
                            const TemplateSet& templates = TemplateSet::builtin());

MessageSequence render_judgment(const std::string& x, const std::string& x_prime,
                                const std::string& source_lang,
                                const TemplateSet& templates = TemplateSet::builtin());

MessageSequence render_extraction(const std::string& y,
                                  const TemplateSet& templates = TemplateSet::builtin());

MessageSequence render_reflection(const std::string& x_prime, const std::string& x,
                                  const TemplateSet& templates = TemplateSet::builtin());

// analysis / suggestions may be empty; the labeled sections still render.
MessageSequence render_revision(const std::string& analysis, const std::string& suggestions,
                                const std::string& x, const std::string& source_lang,
                                const std::string& target_lang,
                                const TemplateSet& templates = TemplateSet::builtin());

// Stable plain-text form of a message sequence; used for golden files and
// scripted-backend matching.
std::string to_prompt_text(const MessageSequence& messages);

}  // namespace dualreflect
