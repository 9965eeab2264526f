#include "dualreflect/batch.hpp"

#include <algorithm>
#include <cstdio>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dualreflect/error.hpp"

namespace dualreflect {
namespace {

std::string task_id_for_line(int line_number) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "task-%04d", line_number);
  return buffer;
}

// Export lines must stay one-per-segment; fold any model-produced newlines.
std::string single_line(const std::string& text) {
  std::string out = text;
  for (char& c : out) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return out;
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json doc = {
      {"backend_id", config.backend_id},
      {"model", config.model},
      {"temperature", config.temperature},
      {"max_iterations", config.max_iterations},
      {"force_extraction_each_iteration", config.force_extraction_each_iteration},
      {"metric", config.metric},
      {"reask_on_extraction_failure", config.reask_on_extraction_failure},
  };
  if (config.max_output_tokens) doc["max_output_tokens"] = *config.max_output_tokens;
  if (!config.stop_sequences.empty()) doc["stop_sequences"] = config.stop_sequences;
  return doc;
}

nlohmann::json outcome_to_json(const TaskOutcome& outcome) {
  nlohmann::json doc = {
      {"task_id", outcome.task.id},
      {"index", outcome.index},
      {"status", outcome.status},
      {"source", outcome.task.source_text},
      {"final_translation", outcome.result.final_translation},
      {"iterations_used", outcome.result.iterations_used},
      {"termination_reason", to_string(outcome.result.termination_reason)},
      {"extraction_fell_back", outcome.result.extraction_fell_back},
  };
  if (outcome.task.reference) doc["reference"] = *outcome.task.reference;
  if (!outcome.error.empty()) doc["error"] = outcome.error;
  return doc;
}

}  // namespace

const char* to_string(RunMode mode) {
  return mode == RunMode::DualReflect ? "dual-reflect" : "zero-shot";
}

std::vector<TranslationTask> load_corpus(const std::string& path, const std::string& source_lang,
                                         const std::string& target_lang) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open corpus: " + path);
  }
  std::vector<TranslationTask> tasks;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    TranslationTask task;
    task.id = task_id_for_line(line_number);
    task.source_lang = source_lang;
    task.target_lang = target_lang;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      task.source_text = line;
    } else {
      task.source_text = line.substr(0, tab);
      task.reference = line.substr(tab + 1);
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

BatchResult run_batch(const BatchSpec& spec, const BackendFactory& make_backend) {
  validate_config(spec.config);
  if (spec.concurrency < 1) {
    throw ValidationError("concurrency must be >= 1");
  }
  std::vector<TranslationTask> tasks =
      load_corpus(spec.corpus_path, spec.source_lang, spec.target_lang);
  if (tasks.empty()) {
    throw ValidationError("corpus has no segments: " + spec.corpus_path);
  }

  const std::filesystem::path out_dir(spec.out_dir);
  const std::filesystem::path transcript_dir = out_dir / "transcripts";
  std::filesystem::create_directories(transcript_dir);

  TemplateSet templates = spec.templates_path.empty() ? TemplateSet::builtin()
                                                      : load_templates(spec.templates_path);

  BatchResult batch;
  batch.tasks.resize(tasks.size());

  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t index = cursor.fetch_add(1);
      if (index >= tasks.size()) return;
      TaskOutcome& outcome = batch.tasks[index];
      outcome.index = static_cast<int>(index);
      outcome.task = tasks[index];
      try {
        validate_task(outcome.task);
      } catch (const ValidationError& error) {
        outcome.status = "invalid";
        outcome.error = error.what();
        continue;
      }
      try {
        TranscriptWriter writer(transcript_path(transcript_dir.string(), outcome.task.id),
                                outcome.task.id);
        std::shared_ptr<Backend> backend = make_backend();
        outcome.result = spec.mode == RunMode::ZeroShot
                             ? run_zero_shot(outcome.task, spec.config, *backend, &writer,
                                             &templates)
                             : run_pipeline(outcome.task, spec.config, *backend, &writer,
                                            &templates);
        outcome.status = "ok";
      } catch (const PipelineBackendFailure& failure) {
        outcome.status = "failed";
        outcome.error = failure.what();
        outcome.result = failure.partial();
      } catch (const Error& error) {
        outcome.status = "failed";
        outcome.error = error.what();
      }
    }
  };

  const int thread_count =
      std::min<int>(spec.concurrency, static_cast<int>(tasks.size()));
  std::vector<std::thread> threads;
  threads.reserve(thread_count);
  for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
  for (std::thread& thread : threads) thread.join();

  for (const TaskOutcome& outcome : batch.tasks) {
    if (outcome.status == "ok") ++batch.ok;
    if (outcome.status == "failed") ++batch.failed;
    if (outcome.status == "invalid") ++batch.invalid;
  }

  // Results table, one record per task in corpus order.
  batch.results_path = (out_dir / "results.jsonl").string();
  {
    std::ofstream results(batch.results_path, std::ios::binary | std::ios::trunc);
    if (!results) {
      throw Error("cannot write " + batch.results_path);
    }
    for (const TaskOutcome& outcome : batch.tasks) {
      results << outcome_to_json(outcome).dump(-1, ' ', false,
                                               nlohmann::json::error_handler_t::replace)
              << '\n';
    }
  }

  const std::string run_name =
      spec.run_name.empty() ? std::string(to_string(spec.mode)) : spec.run_name;

  // Scoring export over the successful tasks.
  std::vector<ExportItem> items;
  bool all_have_references = true;
  for (const TaskOutcome& outcome : batch.tasks) {
    if (outcome.status != "ok") continue;
    ExportItem item;
    item.task = outcome.task;
    item.task.source_text = single_line(item.task.source_text);
    if (item.task.reference) item.task.reference = single_line(*item.task.reference);
    item.final_translation = single_line(outcome.result.final_translation);
    all_have_references = all_have_references && outcome.task.reference.has_value();
    items.push_back(std::move(item));
  }
  if (!items.empty()) {
    batch.exports = export_for_external_scoring(items, (out_dir / "export").string(), run_name,
                                                all_have_references);
  }

  batch.manifest_path = (out_dir / "run_manifest.json").string();
  nlohmann::json manifest = {
      {"run_name", run_name},
      {"mode", to_string(spec.mode)},
      {"corpus_path", spec.corpus_path},
      {"source_lang", spec.source_lang},
      {"target_lang", spec.target_lang},
      {"concurrency", spec.concurrency},
      {"config", config_to_json(spec.config)},
      {"tasks", tasks.size()},
      {"ok", batch.ok},
      {"failed", batch.failed},
      {"invalid", batch.invalid},
  };
  std::ofstream manifest_out(batch.manifest_path, std::ios::binary | std::ios::trunc);
  manifest_out << manifest.dump(2) << '\n';
  return batch;
}

}  // namespace dualreflect
