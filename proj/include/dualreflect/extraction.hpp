#pragma once

#include <optional>
#include <string>

#include "dualreflect/types.hpp"

namespace dualreflect {

enum class Verdict { Converged, Continue };

struct JudgmentResult {
  Verdict verdict = Verdict::Continue;
  // Present only for Continue; a converged verdict carries no explanation.
  std::optional<std::string> explanation;
};

// Classifies a judgment reply by its leading token, case-insensitively,
// after stripping surrounding whitespace, quotes, and punctuation:
// "False" converges, "True" continues with the remainder as explanation.
// Throws UnparseableJudgment when neither token is found.
JudgmentResult parse_judgment(const std::string& raw);

enum class ParseMode { StrictObject, LenientQuotes, FencedBlock };
const char* to_string(ParseMode mode);

struct ExtractedTranslation {
  std::string final_translation;  // never empty
  ParseMode parse_mode = ParseMode::StrictObject;
};

// Three-tier parse of a pattern-extraction reply:
//   1. the whole reply is a JSON object with key "final_translation"
//   2. the whole reply is the single-quoted variant of that object
//   3. a fenced code block or embedded object somewhere in the reply
//      parses under tier 1 or 2
// Throws ExtractionFailure when every tier fails or yields an empty value.
ExtractedTranslation parse_final_translation(const std::string& raw);

}  // namespace dualreflect
