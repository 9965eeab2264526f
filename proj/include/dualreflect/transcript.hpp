#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualreflect/types.hpp"

namespace dualreflect {

inline constexpr int kTranscriptSchemaVersion = 1;

// Immutable record of one backend call: the prompt that was sent, what came
// back, and how it was interpreted.
struct TranscriptEntry {
  std::string run_id;
  std::string task_id;
  std::int64_t seq = 0;  // strictly increasing from 0 within a run, no gaps
  Stage stage = Stage::Draft;
  int iteration = 0;
  MessageSequence rendered_prompt;
  std::string raw_output;
  std::optional<std::string> parsed_summary;
  TokenUsage usage;
  std::int64_t started_at_us = 0;  // microseconds since epoch
  std::int64_t ended_at_us = 0;
  std::vector<std::string> warnings;  // parse and retry notes

  bool operator==(const TranscriptEntry&) const = default;
};

nlohmann::json entry_to_json(const TranscriptEntry& entry);
TranscriptEntry entry_from_json(const nlohmann::json& doc);

// Canonical form omits the volatile timing fields so byte-equality survives
// reruns of the same deterministic scenario.
nlohmann::json entry_to_canonical_json(const TranscriptEntry& entry);
std::string canonical_line(const TranscriptEntry& entry);

// Append-only writer over a line-delimited UTF-8 file, one JSON record per
// line. The file is created (truncated) eagerly so a run that crashes before
// its first append still leaves a loadable empty transcript. Each append is
// flushed before returning, giving the caller a write-ahead guarantee
// between backend calls. One writer per run; not shared across threads.
class TranscriptWriter {
 public:
  TranscriptWriter(std::string path, std::string run_id);

  // Throws TranscriptError unless entry.seq == entries_written() and
  // entry.run_id matches the writer's run.
  void append(const TranscriptEntry& entry);

  const std::string& path() const { return path_; }
  const std::string& run_id() const { return run_id_; }
  std::int64_t entries_written() const { return next_seq_; }

 private:
  std::string path_;
  std::string run_id_;
  std::ofstream out_;
  std::int64_t next_seq_ = 0;
};

struct CorruptLine {
  int line_number = 0;  // 1-based
  std::string message;
};

struct LoadedRun {
  std::vector<TranscriptEntry> entries;
  std::vector<CorruptLine> corrupt_lines;
};

// Reads a transcript file back in seq order. Corrupt lines are reported and
// skipped; the readable remainder is still returned. A missing file throws
// TranscriptError.
LoadedRun load_run_file(const std::string& path);
LoadedRun load_run(const std::string& dir, const std::string& run_id);
std::string transcript_path(const std::string& dir, const std::string& run_id);

}  // namespace dualreflect
