#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dualreflect/types.hpp"

namespace dualreflect {

struct SimilarityScore {
  double value = 0.0;  // [0, 100]
  std::string metric_id;
};

// Character n-gram F-score (orders 1..6, beta=2, whitespace removed before
// n-gram extraction, per-order F averaged over orders seen on either side).
// Deterministic; operates on Unicode code points. Throws MetricError when
// the reference is empty after whitespace removal.
double chrf_score(const std::string& hypothesis, const std::string& reference);
SimilarityScore chrf(const std::string& hypothesis, const std::string& reference);

using MetricFn = std::function<double(const std::string& hypothesis, const std::string& reference)>;

// Disparity between a source x and its round-trip x': 100 - metric(x', x),
// with x on the reference side.
double delta_d(const std::string& x, const std::string& x_prime, const MetricFn& metric);

// Improvement of ours over baseline; both scores must come from the same
// metric (MetricError otherwise). May be negative.
double delta_c(const SimilarityScore& ours, const SimilarityScore& baseline);

struct DisparityRecord {
  std::string task_id;
  double delta_d = 0.0;
  double delta_c = 0.0;
  int iteration_observed = 0;
};

// Sample Pearson r over the (delta_d, delta_c) pairs, clamped to [-1, 1].
// Throws DegenerateSample on fewer than two records or zero variance.
double pearson(const std::vector<DisparityRecord>& records);

struct ExportItem {
  TranslationTask task;
  std::string final_translation;
};

struct ExportPaths {
  std::string source_path;
  std::string hypothesis_path;
  std::string reference_path;  // empty when references were not requested
  std::string manifest_path;
};

// Writes line-aligned source/hypothesis(/reference) files plus a manifest
// mapping line numbers to task ids, UTF-8 with LF endings, one segment per
// line. Fails closed: mixed language pairs, a requested-but-missing
// reference, or an embedded newline in any segment is an error.
ExportPaths export_for_external_scoring(const std::vector<ExportItem>& batch,
                                        const std::string& out_dir, const std::string& run_id,
                                        bool include_references);

}  // namespace dualreflect
