#include "dualreflect/pipeline.hpp"

#include <cctype>
#include <chrono>

#include "dualreflect/extraction.hpp"

namespace dualreflect {
namespace {

std::int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string lowercase(const std::string& text) {
  std::string out = text;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Stage stage_of(PipelineState::Next next) {
  switch (next) {
    case PipelineState::Next::Draft:
      return Stage::Draft;
    case PipelineState::Next::Back:
      return Stage::Back;
    case PipelineState::Next::Judge:
      return Stage::Judge;
    case PipelineState::Next::Reflect:
      return Stage::Reflect;
    case PipelineState::Next::Revise:
      return Stage::Revise;
    case PipelineState::Next::ExtractIntermediate:
    case PipelineState::Next::ExtractFinal:
      return Stage::Extract;
    case PipelineState::Next::Done:
      break;
  }
  throw IllegalStateError("no stage pending");
}

ChatRequest make_request(const RunConfig& config, MessageSequence messages, Stage stage) {
  ChatRequest request;
  request.model = config.model;
  request.messages = std::move(messages);
  request.temperature = config.temperature;
  request.max_output_tokens = config.max_output_tokens;
  request.stop_sequences = config.stop_sequences;
  request.stage_label = to_string(stage);
  return request;
}

// Executes the pending stage: renders the prompt, performs the single
// backend call, interprets the reply, and returns the advanced state.
// `entry` receives the full record of the call. Backend errors propagate
// after the prompt and timing fields have been filled in.
PipelineState execute_stage(const PipelineState& state, const RunConfig& config,
                            Backend& backend, const TemplateSet& templates,
                            TranscriptEntry& entry) {
  if (state.terminated || state.next == PipelineState::Next::Done) {
    throw IllegalStateError("pipeline already terminated for task '" + state.task.id + "'");
  }
  PipelineState next = state;
  const Stage stage = stage_of(state.next);
  const TranslationTask& task = state.task;

  MessageSequence prompt;
  switch (state.next) {
    case PipelineState::Next::Draft:
      prompt = render_draft(task.source_text, task.source_lang, task.target_lang, templates);
      break;
    case PipelineState::Next::Back:
      prompt = render_back(*state.draft, task.target_lang, task.source_lang, templates);
      break;
    case PipelineState::Next::Judge:
      prompt = render_judgment(task.source_text, *state.back_translation, task.source_lang,
                               templates);
      break;
    case PipelineState::Next::Reflect:
      prompt = render_reflection(*state.back_translation, task.source_text, templates);
      break;
    case PipelineState::Next::Revise:
      prompt = render_revision(state.analysis.value_or(""), state.suggestions.value_or(""),
                               task.source_text, task.source_lang, task.target_lang, templates);
      break;
    case PipelineState::Next::ExtractIntermediate:
    case PipelineState::Next::ExtractFinal:
      prompt = render_extraction(*state.draft, templates);
      break;
    case PipelineState::Next::Done:
      break;
  }

  entry.stage = stage;
  entry.rendered_prompt = prompt;
  entry.started_at_us = now_us();
  // Back entries belong to the judgment round they open.
  entry.iteration = state.next == PipelineState::Next::Back ? state.iteration + 1
                                                            : state.iteration;

  ChatResponse response;
  try {
    response = backend.complete(make_request(config, std::move(prompt), stage));
  } catch (...) {
    entry.ended_at_us = now_us();
    throw;
  }
  entry.ended_at_us = now_us();
  entry.raw_output = response.content;
  entry.usage = response.usage;
  if (response.attempts > 1) {
    entry.warnings.push_back("completed after " + std::to_string(response.attempts) +
                             " attempts");
  }

  switch (state.next) {
    case PipelineState::Next::Draft:
      next.draft = response.content;
      next.next = PipelineState::Next::Back;
      break;

    case PipelineState::Next::Back:
      next.back_translation = response.content;
      next.next = PipelineState::Next::Judge;
      break;

    case PipelineState::Next::Judge: {
      JudgmentResult judgment;
      try {
        judgment = parse_judgment(response.content);
      } catch (const UnparseableJudgment&) {
        // Fail open: an unreadable verdict keeps the loop alive and the
        // iteration cap bounds the cost.
        entry.warnings.push_back("unparseable judgment; treated as Continue");
        judgment.verdict = Verdict::Continue;
        judgment.explanation = response.content;
      }
      next.iteration = state.iteration + 1;
      entry.iteration = next.iteration;
      if (judgment.verdict == Verdict::Converged) {
        entry.parsed_summary = "Converged";
        next.exit_reason = TerminationReason::Converged;
        next.next = PipelineState::Next::ExtractFinal;
      } else {
        entry.parsed_summary = "Continue: " + judgment.explanation.value_or("");
        if (next.iteration >= config.max_iterations) {
          next.exit_reason = TerminationReason::IterationCapReached;
          next.next = PipelineState::Next::ExtractFinal;
        } else {
          next.next = PipelineState::Next::Reflect;
        }
      }
      break;
    }

    case PipelineState::Next::Reflect: {
      auto [analysis, suggestions] = split_reflection(response.content);
      next.analysis = analysis;
      next.suggestions = suggestions;
      next.next = PipelineState::Next::Revise;
      break;
    }

    case PipelineState::Next::Revise:
      next.draft = response.content;
      next.back_translation.reset();
      next.analysis.reset();
      next.suggestions.reset();
      next.next = config.force_extraction_each_iteration
                      ? PipelineState::Next::ExtractIntermediate
                      : PipelineState::Next::Back;
      break;

    case PipelineState::Next::ExtractIntermediate:
      try {
        entry.parsed_summary = parse_final_translation(response.content).final_translation;
      } catch (const ExtractionFailure&) {
        entry.warnings.push_back("extraction failed; recording draft verbatim");
        entry.parsed_summary = *state.draft;
      }
      next.next = PipelineState::Next::Back;
      break;

    case PipelineState::Next::ExtractFinal:
      try {
        ExtractedTranslation extracted = parse_final_translation(response.content);
        entry.parsed_summary = extracted.final_translation;
        next.final_translation = extracted.final_translation;
      } catch (const ExtractionFailure&) {
        if (config.reask_on_extraction_failure && !state.extraction_reasked) {
          entry.warnings.push_back("extraction failed; re-asking once");
          next.extraction_reasked = true;
          break;  // next stays ExtractFinal
        }
        entry.warnings.push_back("extraction failed; falling back to last draft");
        entry.parsed_summary = *state.draft;
        next.final_translation = *state.draft;
        next.extraction_fell_back = true;
      }
      if (next.final_translation) {
        next.terminated = true;
        next.next = PipelineState::Next::Done;
      }
      break;

    case PipelineState::Next::Done:
      break;
  }
  return next;
}

PipelineResult drive(PipelineState state, const RunConfig& config, Backend& backend,
                     TranscriptWriter* transcript, const TemplateSet& templates,
                     const std::string& run_id, bool zero_shot) {
  PipelineResult result;
  std::int64_t seq = 0;
  while (!state.terminated) {
    TranscriptEntry entry;
    entry.run_id = run_id;
    entry.task_id = state.task.id;
    entry.seq = seq++;
    try {
      state = execute_stage(state, config, backend, templates, entry);
    } catch (const BackendError& error) {
      entry.warnings.push_back(std::string("backend failure: ") + error.what());
      result.transcript.push_back(entry);
      if (transcript) transcript->append(entry);
      result.termination_reason = TerminationReason::BackendFailure;
      result.iterations_used = state.iteration;
      throw PipelineBackendFailure(error.what(), std::move(result));
    }
    result.transcript.push_back(entry);
    result.total_usage += entry.usage;
    // Durable before the next call goes out.
    if (transcript) transcript->append(entry);

    if (zero_shot && state.next == PipelineState::Next::Back) {
      state.next = PipelineState::Next::ExtractFinal;
      state.exit_reason = TerminationReason::Converged;
    }
  }
  result.final_translation = *state.final_translation;
  result.iterations_used = state.iteration;
  result.termination_reason = state.exit_reason;
  result.extraction_fell_back = state.extraction_fell_back;
  return result;
}

}  // namespace

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::Converged:
      return "Converged";
    case TerminationReason::IterationCapReached:
      return "IterationCapReached";
    case TerminationReason::BackendFailure:
      return "BackendFailure";
  }
  return "Unknown";
}

PipelineState make_initial_state(TranslationTask task) {
  PipelineState state;
  state.task = std::move(task);
  return state;
}

std::pair<std::string, std::string> split_reflection(const std::string& raw) {
  static const char* kHeadings[] = {"translation suggestions", "suggestions"};
  const std::string lowered = lowercase(raw);
  for (const char* heading : kHeadings) {
    std::size_t pos = lowered.find(heading);
    if (pos == std::string::npos) continue;
    std::string analysis = trim_copy(raw.substr(0, pos));
    std::string suggestions = trim_copy(raw.substr(pos));
    return {analysis, suggestions};
  }
  return {trim_copy(raw), std::string()};
}

PipelineState step(const PipelineState& state, const RunConfig& config, Backend& backend,
                   const TemplateSet& templates) {
  if (state.terminated) {
    throw IllegalStateError("step() called on a terminated pipeline");
  }
  validate_config(config);
  TranscriptEntry scratch;
  scratch.run_id = state.task.id;
  scratch.task_id = state.task.id;
  return execute_stage(state, config, backend, templates, scratch);
}

PipelineResult run_pipeline(const TranslationTask& task, const RunConfig& config,
                            Backend& backend, TranscriptWriter* transcript,
                            const TemplateSet* templates, std::string run_id) {
  validate_task(task);
  validate_config(config);
  if (run_id.empty()) run_id = task.id;
  return drive(make_initial_state(task), config, backend, transcript,
               templates ? *templates : TemplateSet::builtin(), run_id, /*zero_shot=*/false);
}

PipelineResult run_zero_shot(const TranslationTask& task, const RunConfig& config,
                             Backend& backend, TranscriptWriter* transcript,
                             const TemplateSet* templates, std::string run_id) {
  validate_task(task);
  validate_config(config);
  if (run_id.empty()) run_id = task.id;
  return drive(make_initial_state(task), config, backend, transcript,
               templates ? *templates : TemplateSet::builtin(), run_id, /*zero_shot=*/true);
}

std::vector<Stage> stages_of(const std::vector<TranscriptEntry>& transcript) {
  std::vector<Stage> stages;
  stages.reserve(transcript.size());
  for (const TranscriptEntry& entry : transcript) stages.push_back(entry.stage);
  return stages;
}

// Draft . (Back . Judge . (Reflect . Revise)?)+ . Extract, with optional
// per-round and repeated-final extractions in lenient mode.
bool stage_sequence_valid(const std::vector<Stage>& stages, bool allow_intermediate_extracts) {
  std::size_t i = 0;
  auto at = [&](Stage s) { return i < stages.size() && stages[i] == s; };

  if (!at(Stage::Draft)) return false;
  ++i;

  int rounds = 0;
  while (at(Stage::Back)) {
    ++i;
    if (!at(Stage::Judge)) return false;
    ++i;
    ++rounds;
    if (at(Stage::Reflect)) {
      ++i;
      if (!at(Stage::Revise)) return false;
      ++i;
      if (allow_intermediate_extracts && at(Stage::Extract) && i + 1 < stages.size()) {
        ++i;
      }
    }
  }
  if (rounds == 0) return false;

  if (!at(Stage::Extract)) return false;
  ++i;
  if (allow_intermediate_extracts && at(Stage::Extract)) ++i;  // single re-ask
  return i == stages.size();
}

}  // namespace dualreflect
