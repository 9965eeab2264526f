#include "dualreflect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string_view>

#include <json.hpp>

#include "dualreflect/error.hpp"

namespace dualreflect {
namespace {

constexpr int kMaxOrder = 6;
constexpr double kBeta = 2.0;

// Decodes UTF-8 into code points; malformed bytes become U+FFFD so scoring
// is total over arbitrary input.
std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0 && i + 1 < text.size()) {
      cp = static_cast<char32_t>(c & 0x1F) << 6 |
           static_cast<char32_t>(text[i + 1] & 0x3F);
      len = 2;
    } else if ((c & 0xF0) == 0xE0 && i + 2 < text.size()) {
      cp = static_cast<char32_t>(c & 0x0F) << 12 |
           static_cast<char32_t>(text[i + 1] & 0x3F) << 6 |
           static_cast<char32_t>(text[i + 2] & 0x3F);
      len = 3;
    } else if ((c & 0xF8) == 0xF0 && i + 3 < text.size()) {
      cp = static_cast<char32_t>(c & 0x07) << 18 |
           static_cast<char32_t>(text[i + 1] & 0x3F) << 12 |
           static_cast<char32_t>(text[i + 2] & 0x3F) << 6 |
           static_cast<char32_t>(text[i + 3] & 0x3F);
      len = 4;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

bool is_space_cp(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' || cp == U'\v';
}

std::u32string strip_whitespace(std::string_view text) {
  std::u32string decoded = decode_utf8(text);
  std::u32string out;
  out.reserve(decoded.size());
  for (char32_t cp : decoded) {
    if (!is_space_cp(cp)) out.push_back(cp);
  }
  return out;
}

std::map<std::u32string, int> ngram_counts(const std::u32string& text, int order) {
  std::map<std::u32string, int> counts;
  if (static_cast<int>(text.size()) < order) return counts;
  for (std::size_t i = 0; i + order <= text.size(); ++i) {
    ++counts[text.substr(i, order)];
  }
  return counts;
}

}  // namespace

double chrf_score(const std::string& hypothesis, const std::string& reference) {
  const std::u32string ref = strip_whitespace(reference);
  if (ref.empty()) {
    throw MetricError("chrf: reference is empty");
  }
  const std::u32string hyp = strip_whitespace(hypothesis);

  double f_sum = 0.0;
  int effective_orders = 0;
  for (int order = 1; order <= kMaxOrder; ++order) {
    const auto hyp_counts = ngram_counts(hyp, order);
    const auto ref_counts = ngram_counts(ref, order);
    long long hyp_total = 0;
    long long ref_total = 0;
    long long matched = 0;
    for (const auto& [gram, count] : hyp_counts) hyp_total += count;
    for (const auto& [gram, count] : ref_counts) ref_total += count;
    for (const auto& [gram, count] : hyp_counts) {
      auto found = ref_counts.find(gram);
      if (found != ref_counts.end()) matched += std::min(count, found->second);
    }
    if (hyp_total == 0 && ref_total == 0) continue;
    ++effective_orders;
    if (hyp_total == 0 || ref_total == 0 || matched == 0) continue;  // F = 0
    const double precision = static_cast<double>(matched) / static_cast<double>(hyp_total);
    const double recall = static_cast<double>(matched) / static_cast<double>(ref_total);
    const double beta2 = kBeta * kBeta;
    f_sum += (1.0 + beta2) * precision * recall / (beta2 * precision + recall);
  }
  if (effective_orders == 0) return 0.0;
  return 100.0 * f_sum / static_cast<double>(effective_orders);
}

SimilarityScore chrf(const std::string& hypothesis, const std::string& reference) {
  return {chrf_score(hypothesis, reference), "chrf"};
}

double delta_d(const std::string& x, const std::string& x_prime, const MetricFn& metric) {
  if (trim_copy(x).empty()) {
    throw MetricError("delta_d: x is empty");
  }
  return 100.0 - metric(x_prime, x);
}

double delta_c(const SimilarityScore& ours, const SimilarityScore& baseline) {
  if (ours.metric_id != baseline.metric_id) {
    throw MetricError("delta_c: metric mismatch ('" + ours.metric_id + "' vs '" +
                      baseline.metric_id + "')");
  }
  return ours.value - baseline.value;
}

double pearson(const std::vector<DisparityRecord>& records) {
  const std::size_t n = records.size();
  if (n < 2) {
    throw DegenerateSample("pearson: need at least 2 records, got " + std::to_string(n));
  }
  double mean_d = 0.0;
  double mean_c = 0.0;
  for (const DisparityRecord& record : records) {
    mean_d += record.delta_d;
    mean_c += record.delta_c;
  }
  mean_d /= static_cast<double>(n);
  mean_c /= static_cast<double>(n);

  double cov = 0.0;
  double var_d = 0.0;
  double var_c = 0.0;
  for (const DisparityRecord& record : records) {
    const double dd = record.delta_d - mean_d;
    const double dc = record.delta_c - mean_c;
    cov += dd * dc;
    var_d += dd * dd;
    var_c += dc * dc;
  }
  if (var_d == 0.0 || var_c == 0.0) {
    throw DegenerateSample("pearson: zero variance in a coordinate");
  }
  const double r = cov / (std::sqrt(var_d) * std::sqrt(var_c));
  return std::clamp(r, -1.0, 1.0);
}

ExportPaths export_for_external_scoring(const std::vector<ExportItem>& batch,
                                        const std::string& out_dir, const std::string& run_id,
                                        bool include_references) {
  if (batch.empty()) {
    throw ValidationError("export: batch is empty");
  }
  const std::string& source_lang = batch.front().task.source_lang;
  const std::string& target_lang = batch.front().task.target_lang;
  for (const ExportItem& item : batch) {
    if (item.task.source_lang != source_lang || item.task.target_lang != target_lang) {
      throw ValidationError("export: mixed language pairs (task '" + item.task.id + "' is " +
                            item.task.source_lang + "->" + item.task.target_lang +
                            ", expected " + source_lang + "->" + target_lang + ")");
    }
    if (include_references && !item.task.reference) {
      throw ValidationError("export: task '" + item.task.id +
                            "' has no reference but references were requested");
    }
    for (const std::string* text : {&item.task.source_text, &item.final_translation}) {
      if (text->find('\n') != std::string::npos) {
        throw ValidationError("export: task '" + item.task.id +
                              "' contains an embedded newline; normalize before exporting");
      }
    }
    if (item.task.reference && item.task.reference->find('\n') != std::string::npos) {
      throw ValidationError("export: task '" + item.task.id +
                            "' reference contains an embedded newline");
    }
  }

  std::filesystem::create_directories(out_dir);
  auto open = [&](const std::string& name) {
    std::string path = (std::filesystem::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("export: cannot write " + path);
    }
    return std::make_pair(std::move(out), std::move(path));
  };

  auto [src, src_path] = open(run_id + ".src.txt");
  auto [hyp, hyp_path] = open(run_id + ".hyp.txt");
  ExportPaths paths;
  paths.source_path = src_path;
  paths.hypothesis_path = hyp_path;

  std::ofstream ref;
  if (include_references) {
    auto [ref_stream, ref_path] = open(run_id + ".ref.txt");
    ref = std::move(ref_stream);
    paths.reference_path = ref_path;
  }

  nlohmann::json lines = nlohmann::json::array();
  for (const ExportItem& item : batch) {
    src << item.task.source_text << '\n';
    hyp << item.final_translation << '\n';
    if (include_references) {
      ref << *item.task.reference << '\n';
    }
    lines.push_back(item.task.id);
  }
  src.flush();
  hyp.flush();
  if (include_references) ref.flush();
  if (!src || !hyp || (include_references && !ref)) {
    throw Error("export: write failed under " + out_dir);
  }

  nlohmann::json manifest = {
      {"run_id", run_id},
      {"source_lang", source_lang},
      {"target_lang", target_lang},
      {"line_tasks", std::move(lines)},  // line i (1-based) <-> line_tasks[i-1]
  };
  auto [manifest_stream, manifest_path] = open(run_id + ".manifest.json");
  manifest_stream << manifest.dump(2) << '\n';
  manifest_stream.flush();
  paths.manifest_path = manifest_path;
  return paths;
}

}  // namespace dualreflect
