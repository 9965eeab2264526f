#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualreflect/metrics.hpp"

namespace dualreflect {

// Offline analysis over two completed batch directories. Score files are
// optional; when absent the built-in metric scores against corpus
// references. Keys for score_files: "ours", "baseline", "disparity" —
// each a file of one score per line aligned with the run's export manifest.
struct AnalysisOptions {
  std::string run_dir;       // feedback-loop run
  std::string baseline_dir;  // zero-shot run over the same corpus
  std::map<std::string, std::string> score_files;
};

struct IterationPoint {
  int iteration = 0;
  double mean_score = 0.0;
  int samples = 0;
};

struct AnalysisReport {
  std::string metric_id;
  std::vector<DisparityRecord> records;  // per task: delta_d, delta_c
  bool pearson_defined = false;
  double pearson_r = 0.0;
  // Present when the run recorded per-iteration extractions.
  std::vector<IterationPoint> iteration_curve;
};

// Never calls a backend: consumes transcripts, results and score files only.
// Throws ValidationError on corpus mismatch (naming the first offender) or
// missing scores.
AnalysisReport analyze_runs(const AnalysisOptions& options);

std::string format_report_text(const AnalysisReport& report);
nlohmann::json report_to_json(const AnalysisReport& report);

}  // namespace dualreflect
