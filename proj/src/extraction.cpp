#include "dualreflect/extraction.hpp"

#include <cctype>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dualreflect/error.hpp"

namespace dualreflect {
namespace {

constexpr std::string_view kKey = "final_translation";

// Multi-byte punctuation that models like to wrap verdicts in: curly quotes,
// dashes, ellipsis, and common full-width CJK marks.
constexpr std::string_view kWidePunct[] = {
    "‘", "’", "“", "”", "–", "—",
    "…", "：", "，", "！", "？", "。",
};

std::size_t skip_separators(std::string_view text, std::size_t pos) {
  while (pos < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[pos]);
    if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
      ++pos;
      continue;
    }
    bool wide = false;
    for (std::string_view mark : kWidePunct) {
      if (text.compare(pos, mark.size(), mark) == 0) {
        pos += mark.size();
        wide = true;
        break;
      }
    }
    if (!wide) break;
  }
  return pos;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim_trailing(std::string_view text) {
  std::size_t end = text.size();
  while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(0, end));
}

// --- final-translation object parsing ---------------------------------

std::optional<std::string> try_strict(std::string_view text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  auto found = doc.find(kKey);
  if (found == doc.end() || !found->is_string()) return std::nullopt;
  return found->get<std::string>();
}

// Hand parser for the single-quoted exemplar shape the instruction shows.
// Accepts either quote style per string and tolerates extra scalar fields.
class LenientParser {
 public:
  explicit LenientParser(std::string_view text) : text_(text) {}

  std::optional<std::string> parse() {
    skip_ws();
    if (!consume('{')) return std::nullopt;
    std::optional<std::string> value;
    skip_ws();
    if (peek() == '}') return std::nullopt;  // empty object has no key
    while (true) {
      skip_ws();
      auto key = parse_string();
      if (!key) return std::nullopt;
      skip_ws();
      if (!consume(':')) return std::nullopt;
      skip_ws();
      if (peek() == '\'' || peek() == '"') {
        auto scalar = parse_string();
        if (!scalar) return std::nullopt;
        if (*key == kKey) value = *scalar;
      } else {
        if (!skip_bare_scalar()) return std::nullopt;
      }
      skip_ws();
      if (consume(',')) continue;
      if (consume('}')) break;
      return std::nullopt;
    }
    skip_ws();
    if (pos_ != text_.size()) return std::nullopt;
    return value;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  bool consume(char expected) {
    if (peek() != expected) return false;
    ++pos_;
    return true;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::optional<std::string> parse_string() {
    char quote = peek();
    if (quote != '\'' && quote != '"') return std::nullopt;
    ++pos_;
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_++];
      if (c == '\\' && pos_ < text_.size()) {
        char escaped = text_[pos_++];
        switch (escaped) {
          case 'n':
            out.push_back('\n');
            break;
          case 't':
            out.push_back('\t');
            break;
          case 'r':
            out.push_back('\r');
            break;
          default:
            out.push_back(escaped);
        }
        continue;
      }
      if (c == quote) return out;
      out.push_back(c);
    }
    return std::nullopt;  // unterminated
  }

  bool skip_bare_scalar() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}') ++pos_;
    return pos_ > start;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::optional<std::string> try_lenient(std::string_view text) {
  return LenientParser(text).parse();
}

std::optional<std::string> try_both(std::string_view text) {
  if (auto value = try_strict(text)) return value;
  return try_lenient(text);
}

// End of the balanced object starting at text[start] == '{', honoring
// quoted strings in either style.
std::optional<std::size_t> find_object_end(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  char quote = '\0';
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == quote) {
        in_string = false;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      in_string = true;
      quote = c;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

std::optional<std::string> scan_embedded_objects(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    auto end = find_object_end(text, i);
    if (!end) continue;
    if (auto value = try_both(text.substr(i, *end - i + 1))) return value;
  }
  return std::nullopt;
}

std::optional<std::string> scan_fenced_blocks(std::string_view text) {
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find("```", pos);
    if (open == std::string_view::npos) return std::nullopt;
    std::size_t close = text.find("```", open + 3);
    if (close == std::string_view::npos) return std::nullopt;
    std::string_view inner = text.substr(open + 3, close - open - 3);
    // Drop a language tag line such as ```json.
    std::size_t newline = inner.find('\n');
    if (newline != std::string_view::npos) {
      std::string_view first_line = inner.substr(0, newline);
      bool tag_only = !first_line.empty() && first_line.find('{') == std::string_view::npos;
      if (tag_only) inner = inner.substr(newline + 1);
    }
    if (auto value = try_both(trim_copy(inner))) return value;
    if (auto value = scan_embedded_objects(inner)) return value;
    pos = close + 3;
  }
}

}  // namespace

const char* to_string(ParseMode mode) {
  switch (mode) {
    case ParseMode::StrictObject:
      return "StrictObject";
    case ParseMode::LenientQuotes:
      return "LenientQuotes";
    case ParseMode::FencedBlock:
      return "FencedBlock";
  }
  return "Unknown";
}

JudgmentResult parse_judgment(const std::string& raw) {
  std::string_view text(raw);
  std::size_t start = skip_separators(text, 0);
  std::size_t end = start;
  while (end < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[end]);
    if (c < 0x80 && std::isalpha(c)) {
      ++end;
    } else {
      break;
    }
  }
  std::string token = lowercase(text.substr(start, end - start));
  if (token == "false") {
    return {Verdict::Converged, std::nullopt};
  }
  if (token == "true") {
    std::size_t rest = skip_separators(text, end);
    std::string explanation = trim_trailing(text.substr(rest));
    if (explanation.empty()) {
      return {Verdict::Continue, std::nullopt};
    }
    return {Verdict::Continue, std::move(explanation)};
  }
  throw UnparseableJudgment("judgment reply has no leading True/False token");
}

ExtractedTranslation parse_final_translation(const std::string& raw) {
  std::string trimmed = trim_copy(raw);
  if (auto value = try_strict(trimmed); value && !value->empty()) {
    return {*value, ParseMode::StrictObject};
  }
  if (auto value = try_lenient(trimmed); value && !value->empty()) {
    return {*value, ParseMode::LenientQuotes};
  }
  if (auto value = scan_fenced_blocks(trimmed); value && !value->empty()) {
    return {*value, ParseMode::FencedBlock};
  }
  if (auto value = scan_embedded_objects(trimmed); value && !value->empty()) {
    return {*value, ParseMode::FencedBlock};
  }
  throw ExtractionFailure("no final_translation object found in reply");
}

}  // namespace dualreflect
