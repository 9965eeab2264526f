#include <doctest.h>

#include <filesystem>
#include <random>

#include "dualreflect/error.hpp"
#include "dualreflect/transcript.hpp"
#include "test_support.hpp"

using namespace dualreflect;
using namespace testsupport;

namespace {

TranscriptEntry sample_entry(std::int64_t seq, Stage stage = Stage::Draft) {
  TranscriptEntry entry;
  entry.run_id = "run-1";
  entry.task_id = "task-0001";
  entry.seq = seq;
  entry.stage = stage;
  entry.iteration = 1;
  entry.rendered_prompt = {{Role::System, "instruction"}, {Role::User, "input"}};
  entry.raw_output = "output";
  entry.parsed_summary = "summary";
  entry.usage = {12, 34};
  entry.started_at_us = 1000;
  entry.ended_at_us = 2000;
  entry.warnings = {"note"};
  return entry;
}

TranscriptEntry random_entry(std::mt19937& rng, std::int64_t seq) {
  static const std::vector<std::string> texts = {
      "plain",
      "line\nbreaks\tand tabs",
      "quotes \" and ' and `",
      "中文、日本語、한국어",
      "emoji \U0001F600\U0001F680",
      "",
      "back\\slash and {braces}",
  };
  std::uniform_int_distribution<std::size_t> pick(0, texts.size() - 1);
  std::uniform_int_distribution<int> stage_pick(0, 5);
  std::uniform_int_distribution<int> flag(0, 1);
  TranscriptEntry entry;
  entry.run_id = "run-prop";
  entry.task_id = "task-prop";
  entry.seq = seq;
  entry.stage = static_cast<Stage>(stage_pick(rng));
  entry.iteration = static_cast<int>(seq % 4);
  entry.rendered_prompt = {{Role::System, texts[pick(rng)]}, {Role::User, texts[pick(rng)]}};
  entry.raw_output = texts[pick(rng)];
  if (flag(rng)) entry.parsed_summary = texts[pick(rng)];
  entry.usage = {static_cast<std::int64_t>(seq), static_cast<std::int64_t>(seq * 2)};
  entry.started_at_us = 123456789 + seq;
  entry.ended_at_us = entry.started_at_us + 10;
  if (flag(rng)) entry.warnings = {texts[pick(rng)]};
  return entry;
}

}  // namespace

TEST_CASE("append/load round-trip preserves every field byte-for-byte") {
  const std::string dir = temp_dir("transcript");
  {
    TranscriptWriter writer(transcript_path(dir, "run-1"), "run-1");
    writer.append(sample_entry(0, Stage::Draft));
    writer.append(sample_entry(1, Stage::Back));
    writer.append(sample_entry(2, Stage::Judge));
  }
  LoadedRun run = load_run(dir, "run-1");
  CHECK(run.corrupt_lines.empty());
  REQUIRE(run.entries.size() == 3);
  CHECK(run.entries[0] == sample_entry(0, Stage::Draft));
  CHECK(run.entries[1] == sample_entry(1, Stage::Back));
  CHECK(run.entries[2] == sample_entry(2, Stage::Judge));
}

TEST_CASE("property: serialize/deserialize is identity on generated entries") {
  std::mt19937 rng(31337);
  for (int i = 0; i < 200; ++i) {
    TranscriptEntry entry = random_entry(rng, i);
    TranscriptEntry back = entry_from_json(entry_to_json(entry));
    CHECK(back == entry);
  }
}

TEST_CASE("writer enforces the sequence discipline") {
  const std::string dir = temp_dir("transcript-seq");
  TranscriptWriter writer(transcript_path(dir, "run-1"), "run-1");
  CHECK_THROWS_AS(writer.append(sample_entry(1)), TranscriptError);  // must start at 0
  writer.append(sample_entry(0));
  CHECK_THROWS_AS(writer.append(sample_entry(2)), TranscriptError);  // gap
  CHECK_THROWS_AS(writer.append(sample_entry(0)), TranscriptError);  // repeat
  writer.append(sample_entry(1));
  TranscriptEntry wrong_run = sample_entry(2);
  wrong_run.run_id = "other";
  CHECK_THROWS_AS(writer.append(wrong_run), TranscriptError);
}

TEST_CASE("a corrupt line is reported and the rest still loads") {
  const std::string dir = temp_dir("transcript-corrupt");
  const std::string path = transcript_path(dir, "run-1");
  {
    TranscriptWriter writer(path, "run-1");
    for (int i = 0; i < 5; ++i) writer.append(sample_entry(i));
  }
  // Clobber the third line.
  std::vector<std::string> lines;
  {
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  REQUIRE(lines.size() == 5);
  lines[2] = "{not json at all";
  std::string rewritten;
  for (const auto& line : lines) rewritten += line + "\n";
  write_file(path, rewritten);

  LoadedRun run = load_run_file(path);
  CHECK(run.entries.size() == 4);
  REQUIRE(run.corrupt_lines.size() == 1);
  CHECK(run.corrupt_lines[0].line_number == 3);
}

TEST_CASE("unknown run id is a not-found error") {
  const std::string dir = temp_dir("transcript-missing");
  CHECK_THROWS_AS(load_run(dir, "no-such-run"), TranscriptError);
}

TEST_CASE("an empty transcript file loads as an empty run") {
  const std::string dir = temp_dir("transcript-empty");
  TranscriptWriter writer(transcript_path(dir, "run-1"), "run-1");
  LoadedRun run = load_run(dir, "run-1");
  CHECK(run.entries.empty());
  CHECK(run.corrupt_lines.empty());
}

TEST_CASE("canonical form drops timestamps but keeps everything else") {
  TranscriptEntry a = sample_entry(0);
  TranscriptEntry b = sample_entry(0);
  b.started_at_us = 999999;
  b.ended_at_us = 1000042;
  CHECK(canonical_line(a) == canonical_line(b));

  TranscriptEntry c = sample_entry(0);
  c.raw_output = "different";
  CHECK(canonical_line(a) != canonical_line(c));

  auto doc = entry_to_canonical_json(a);
  CHECK(!doc.contains("started_at_us"));
  CHECK(!doc.contains("ended_at_us"));
  CHECK(doc.at("schema_version") == kTranscriptSchemaVersion);
}

TEST_CASE("unsupported schema versions are reported as corruption") {
  auto doc = entry_to_json(sample_entry(0));
  doc["schema_version"] = 999;
  CHECK_THROWS_AS(entry_from_json(doc), TranscriptError);
}
