#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dualreflect/backend.hpp"
#include "dualreflect/error.hpp"
#include "dualreflect/prompts.hpp"
#include "dualreflect/transcript.hpp"
#include "dualreflect/types.hpp"

namespace dualreflect {

enum class TerminationReason { Converged, IterationCapReached, BackendFailure };
const char* to_string(TerminationReason reason);

// Loop state for one translation. Confined to a single run; never shared.
struct PipelineState {
  enum class Next {
    Draft,
    Back,
    Judge,
    Reflect,
    Revise,
    ExtractIntermediate,  // forced per-iteration extraction; loop continues
    ExtractFinal,
    Done,
  };

  TranslationTask task;
  int iteration = 0;  // completed judgment rounds
  std::optional<std::string> draft;             // y
  std::optional<std::string> back_translation;  // x'
  std::optional<std::string> analysis;          // AR
  std::optional<std::string> suggestions;       // TS
  bool terminated = false;
  std::optional<std::string> final_translation;

  // Machine bookkeeping.
  Next next = Next::Draft;
  TerminationReason exit_reason = TerminationReason::Converged;
  bool extraction_fell_back = false;
  bool extraction_reasked = false;
};

PipelineState make_initial_state(TranslationTask task);

struct PipelineResult {
  std::string final_translation;
  int iterations_used = 0;
  std::vector<TranscriptEntry> transcript;
  TerminationReason termination_reason = TerminationReason::Converged;
  TokenUsage total_usage;
  bool extraction_fell_back = false;
};

// Thrown when the backend gives up mid-run; the transcript captured so far
// (including the failed call) rides along in the payload.
class PipelineBackendFailure : public Error {
 public:
  PipelineBackendFailure(const std::string& message, PipelineResult partial)
      : Error(message), partial_(std::move(partial)) {}

  const PipelineResult& partial() const { return partial_; }

 private:
  PipelineResult partial_;
};

// Advances the state machine by exactly one stage (one backend call).
// Throws IllegalStateError on a terminated state.
PipelineState step(const PipelineState& state, const RunConfig& config, Backend& backend,
                   const TemplateSet& templates = TemplateSet::builtin());

// Full loop: draft once, then back-translate / judge / reflect / revise until
// the judgment converges or the iteration cap is reached, finishing with a
// pattern extraction of the last draft. Every backend call appends exactly
// one transcript entry; when a writer is given, each entry is durable before
// the next call goes out.
PipelineResult run_pipeline(const TranslationTask& task, const RunConfig& config,
                            Backend& backend, TranscriptWriter* transcript = nullptr,
                            const TemplateSet* templates = nullptr, std::string run_id = {});

// Draft followed by extraction only; the no-feedback baseline.
PipelineResult run_zero_shot(const TranslationTask& task, const RunConfig& config,
                             Backend& backend, TranscriptWriter* transcript = nullptr,
                             const TemplateSet* templates = nullptr, std::string run_id = {});

// Checks a stage-label sequence against
//   Draft . (Back . Judge . (Reflect . Revise)?)+ . Extract
// With allow_intermediate_extracts, an Extract may also follow each Revise
// (the forced per-iteration mode) and the final extraction may repeat once
// (the re-ask option).
bool stage_sequence_valid(const std::vector<Stage>& stages,
                          bool allow_intermediate_extracts = false);

std::vector<Stage> stages_of(const std::vector<TranscriptEntry>& transcript);

// Splits a reflection reply into (analysis, suggestions) at the first
// suggestions heading; without one, everything is analysis.
std::pair<std::string, std::string> split_reflection(const std::string& raw);

}  // namespace dualreflect
