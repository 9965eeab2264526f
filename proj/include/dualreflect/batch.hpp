#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dualreflect/backend.hpp"
#include "dualreflect/metrics.hpp"
#include "dualreflect/pipeline.hpp"
#include "dualreflect/types.hpp"

namespace dualreflect {

enum class RunMode { DualReflect, ZeroShot };
const char* to_string(RunMode mode);

struct BatchSpec {
  std::string corpus_path;
  std::string source_lang;
  std::string target_lang;
  RunConfig config;
  std::string out_dir;
  RunMode mode = RunMode::DualReflect;
  int concurrency = 4;
  std::string run_name;        // export file stem; defaults to the mode name
  std::string templates_path;  // optional prompt overrides
};

struct TaskOutcome {
  int index = 0;
  TranslationTask task;
  std::string status;  // "ok" | "failed" | "invalid"
  std::string error;
  PipelineResult result;  // populated for "ok"; partial for "failed"
};

struct BatchResult {
  std::vector<TaskOutcome> tasks;  // ordered by task index
  int ok = 0;
  int failed = 0;
  int invalid = 0;
  ExportPaths exports;
  std::string results_path;
  std::string manifest_path;
};

// Corpus format: one source segment per line, optional tab + reference.
// Empty lines become tasks that fail validation individually instead of
// aborting the batch. Task ids are "task-NNNN" by 1-based line number.
std::vector<TranslationTask> load_corpus(const std::string& path, const std::string& source_lang,
                                         const std::string& target_lang);

// One backend instance per pipeline run. Scripted factories should return a
// fresh instance each call so concurrent tasks cannot interleave queues;
// HTTP factories may return the same shared client.
using BackendFactory = std::function<std::shared_ptr<Backend>()>;

// Drives every corpus segment through the selected mode with bounded
// concurrency. Per-task transcripts land in {out}/transcripts/, results in
// {out}/results.jsonl, the effective configuration in
// {out}/run_manifest.json, and line-aligned scoring exports in {out}/export/.
// Per-task failures are recorded and the batch continues.
BatchResult run_batch(const BatchSpec& spec, const BackendFactory& make_backend);

}  // namespace dualreflect
