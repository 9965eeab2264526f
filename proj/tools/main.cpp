// Command-line driver: single translations, corpus batches, and offline
// analysis of completed runs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dualreflect/analyze.hpp"
#include "dualreflect/backend.hpp"
#include "dualreflect/batch.hpp"
#include "dualreflect/metrics.hpp"
#include "dualreflect/pipeline.hpp"

namespace {

using namespace dualreflect;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitBackendFailure = 2;
constexpr int kExitFallbackUsed = 3;

struct BackendOptions {
  std::string backend_id = "http";
  std::string script_path;
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  long timeout_ms = 120000;
  int max_attempts = 5;
  int max_in_flight = 0;
  bool verbose = false;
};

void add_backend_options(CLI::App* cmd, BackendOptions& options) {
  cmd->add_option("--backend", options.backend_id, "Backend kind")
      ->check(CLI::IsMember({"http", "scripted"}))
      ->capture_default_str();
  cmd->add_option("--script", options.script_path, "Rule script for the scripted backend");
  cmd->add_option("--base-url", options.base_url, "Chat-completions base URL")
      ->envname("DR_BASE_URL")
      ->capture_default_str();
  cmd->add_option("--api-key", options.api_key, "Bearer token")->envname("DR_API_KEY");
  cmd->add_option("--timeout-ms", options.timeout_ms, "Per-request timeout")
      ->capture_default_str();
  cmd->add_option("--max-attempts", options.max_attempts, "Retry attempt cap")
      ->capture_default_str();
  cmd->add_option("--max-in-flight", options.max_in_flight,
                  "Bound on simultaneous requests (0 = unlimited)");
  cmd->add_flag("--verbose", options.verbose, "Log request metadata to stderr");
}

void add_run_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--model", config.model, "Model identifier")->capture_default_str();
  cmd->add_option("--temperature", config.temperature, "Sampling temperature")
      ->capture_default_str();
  cmd->add_option("--max-iterations", config.max_iterations, "Judgment-round cap")
      ->capture_default_str();
  cmd->add_flag("--force-extract-each-iter", config.force_extraction_each_iteration,
                "Extract a candidate answer after every revision");
  cmd->add_flag("--reask-extraction", config.reask_on_extraction_failure,
                "Re-ask once when extraction output is unparseable");
  cmd->add_option("--max-output-tokens",
                  [&config](const CLI::results_t& values) {
                    config.max_output_tokens = std::stoi(values.front());
                    return true;
                  },
                  "Completion token cap (unset = no cap)");
}

BackendFactory make_backend_factory(const BackendOptions& options) {
  if (options.backend_id == "scripted") {
    if (options.script_path.empty()) {
      throw ValidationError("--backend scripted requires --script");
    }
    auto rules = std::make_shared<std::vector<ScriptedRule>>(load_script(options.script_path));
    // Fresh instance per run so concurrent tasks replay the script
    // independently.
    return [rules]() { return std::make_shared<ScriptedBackend>(*rules); };
  }
  HttpBackendConfig config;
  config.base_url = options.base_url;
  config.api_key = options.api_key;
  config.timeout = std::chrono::milliseconds(options.timeout_ms);
  config.retry.max_attempts = options.max_attempts;
  config.max_in_flight = options.max_in_flight;
  config.verbose = options.verbose;
  std::shared_ptr<Backend> shared = make_http_backend(config);
  return [shared]() { return shared; };
}

std::string read_all_stdin() {
  std::ostringstream buffer;
  buffer << std::cin.rdbuf();
  return buffer.str();
}

int run_translate(const BackendOptions& backend_options, const RunConfig& config,
                  const std::string& from, const std::string& to, std::string text,
                  const std::string& mode, const std::string& transcript_dir,
                  const std::string& task_id, const std::string& templates_path) {
  if (text.empty()) {
    text = read_all_stdin();
  }
  TranslationTask task;
  task.id = task_id;
  task.source_text = trim_copy(text);
  task.source_lang = from;
  task.target_lang = to;

  TemplateSet templates =
      templates_path.empty() ? TemplateSet::builtin() : load_templates(templates_path);

  std::unique_ptr<TranscriptWriter> writer;
  if (!transcript_dir.empty()) {
    writer = std::make_unique<TranscriptWriter>(transcript_path(transcript_dir, task.id),
                                                task.id);
  }

  std::shared_ptr<Backend> backend = make_backend_factory(backend_options)();
  PipelineResult result =
      mode == "zero-shot"
          ? run_zero_shot(task, config, *backend, writer.get(), &templates)
          : run_pipeline(task, config, *backend, writer.get(), &templates);

  std::cout << result.final_translation << "\n";
  std::cerr << "[" << to_string(result.termination_reason) << " after "
            << result.iterations_used << " iteration(s), " << result.transcript.size()
            << " calls]\n";
  return result.extraction_fell_back ? kExitFallbackUsed : kExitOk;
}

int run_batch_cmd(const BackendOptions& backend_options, BatchSpec spec) {
  spec.config.backend_id = backend_options.backend_id;
  BatchResult result = run_batch(spec, make_backend_factory(backend_options));
  std::cerr << "batch complete: " << result.ok << " ok, " << result.failed << " failed, "
            << result.invalid << " invalid\n";
  std::cerr << "results: " << result.results_path << "\n";
  if (!result.exports.hypothesis_path.empty()) {
    std::cerr << "export: " << result.exports.hypothesis_path << "\n";
  }
  if (result.ok == 0) {
    std::cerr << "error: no task succeeded\n";
    return kExitBackendFailure;
  }
  return kExitOk;
}

int run_analyze(const std::string& run_dir, const std::string& baseline_dir,
                const std::vector<std::string>& score_args, const std::string& metric,
                std::string out_path) {
  AnalysisOptions options;
  options.run_dir = run_dir;
  options.baseline_dir = baseline_dir;
  for (const std::string& arg : score_args) {
    auto eq = arg.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("--scores expects name=path, got '" + arg + "'");
    }
    std::string name = arg.substr(0, eq);
    if (name != "ours" && name != "baseline" && name != "disparity") {
      throw ValidationError("--scores name must be ours|baseline|disparity, got '" + name +
                            "'");
    }
    options.score_files[name] = arg.substr(eq + 1);
  }
  if (metric == "external" && options.score_files.empty()) {
    throw ValidationError("--metric external requires --scores files");
  }

  AnalysisReport report = analyze_runs(options);
  std::cout << format_report_text(report);

  if (out_path.empty()) {
    out_path = (std::filesystem::path(run_dir) / "analysis.json").string();
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write report: " + out_path);
  }
  out << report_to_json(report).dump(2) << "\n";
  std::cerr << "report: " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-learning reflective translation pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read defaults from an INI/TOML file");

  // translate
  auto* translate = app.add_subcommand("translate", "Translate one segment");
  BackendOptions translate_backend;
  RunConfig translate_config;
  std::string from;
  std::string to;
  std::string text;
  std::string mode = "dual-reflect";
  std::string transcript_dir;
  std::string task_id = "cli";
  std::string templates_path;
  translate->add_option("--from", from, "Source language name")->required();
  translate->add_option("--to", to, "Target language name")->required();
  translate->add_option("--text", text, "Source text (stdin when omitted)");
  translate->add_option("--mode", mode, "Pipeline mode")
      ->check(CLI::IsMember({"dual-reflect", "zero-shot"}))
      ->capture_default_str();
  translate->add_option("--transcript-dir", transcript_dir, "Directory for the run transcript");
  translate->add_option("--id", task_id, "Task identifier")->capture_default_str();
  translate->add_option("--templates", templates_path, "Prompt template override file");
  add_run_options(translate, translate_config);
  add_backend_options(translate, translate_backend);

  // batch
  auto* batch = app.add_subcommand("batch", "Translate a corpus file");
  BackendOptions batch_backend;
  BatchSpec spec;
  std::string batch_mode = "dual-reflect";
  batch->add_option("--input", spec.corpus_path, "Corpus file (segment per line, optional "
                                                 "tab-separated reference)")
      ->required();
  batch->add_option("--from", spec.source_lang, "Source language name")->required();
  batch->add_option("--to", spec.target_lang, "Target language name")->required();
  batch->add_option("--out", spec.out_dir, "Output directory")->required();
  batch->add_option("--mode", batch_mode, "Pipeline mode")
      ->check(CLI::IsMember({"dual-reflect", "zero-shot"}))
      ->capture_default_str();
  batch->add_option("--concurrency", spec.concurrency, "Simultaneous pipelines")
      ->capture_default_str();
  batch->add_option("--run-name", spec.run_name, "Stem for export files (default: mode name)");
  batch->add_option("--templates", spec.templates_path, "Prompt template override file");
  batch->add_option("--metric", spec.config.metric, "Metric recorded in the manifest")
      ->check(CLI::IsMember({"chrf", "external"}))
      ->capture_default_str();
  add_run_options(batch, spec.config);
  add_backend_options(batch, batch_backend);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Compare a run against its zero-shot baseline");
  std::string run_dir;
  std::string baseline_dir;
  std::vector<std::string> score_args;
  std::string analyze_metric = "chrf";
  std::string analyze_out;
  analyze->add_option("run_dir", run_dir, "Batch directory of the feedback-loop run")
      ->required();
  analyze->add_option("baseline_dir", baseline_dir, "Batch directory of the zero-shot run")
      ->required();
  analyze->add_option("--scores", score_args,
                      "External per-segment scores as name=path (names: ours, baseline, "
                      "disparity); one score per line, aligned with the export manifest");
  analyze->add_option("--metric", analyze_metric, "Scoring source")
      ->check(CLI::IsMember({"chrf", "external"}))
      ->capture_default_str();
  analyze->add_option("--out", analyze_out, "Machine-readable report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    int code = app.exit(error);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (translate->parsed()) {
      return run_translate(translate_backend, translate_config, from, to, text, mode,
                           transcript_dir, task_id, templates_path);
    }
    if (batch->parsed()) {
      spec.mode = batch_mode == "zero-shot" ? RunMode::ZeroShot : RunMode::DualReflect;
      return run_batch_cmd(batch_backend, spec);
    }
    if (analyze->parsed()) {
      return run_analyze(run_dir, baseline_dir, score_args, analyze_metric, analyze_out);
    }
  } catch (const ValidationError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitValidation;
  } catch (const PipelineBackendFailure& error) {
    std::cerr << "backend failure: " << error.what() << "\n";
    std::cerr << "partial transcript entries: " << error.partial().transcript.size() << "\n";
    return kExitBackendFailure;
  } catch (const Error& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitBackendFailure;
  }
  return kExitValidation;
}
