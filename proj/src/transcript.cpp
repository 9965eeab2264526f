#include "dualreflect/transcript.hpp"

#include <filesystem>

#include "dualreflect/error.hpp"

namespace dualreflect {
namespace {

// Invalid UTF-8 from a misbehaving model must not make a record unwritable.
std::string dump_compact(const nlohmann::json& doc) {
  return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

nlohmann::json messages_to_json(const MessageSequence& messages) {
  nlohmann::json out = nlohmann::json::array();
  for (const Message& message : messages) {
    out.push_back({{"role", to_string(message.role)}, {"content", message.content}});
  }
  return out;
}

MessageSequence messages_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) {
    throw TranscriptError("rendered_prompt must be an array");
  }
  MessageSequence out;
  for (const auto& node : doc) {
    auto role = role_from_string(node.at("role").get<std::string>());
    if (!role) {
      throw TranscriptError("unknown message role");
    }
    out.push_back({*role, node.at("content").get<std::string>()});
  }
  return out;
}

nlohmann::json entry_core_json(const TranscriptEntry& entry) {
  nlohmann::json doc = {
      {"schema_version", kTranscriptSchemaVersion},
      {"run_id", entry.run_id},
      {"task_id", entry.task_id},
      {"seq", entry.seq},
      {"stage", to_string(entry.stage)},
      {"iteration", entry.iteration},
      {"rendered_prompt", messages_to_json(entry.rendered_prompt)},
      {"raw_output", entry.raw_output},
      {"usage",
       {{"prompt_tokens", entry.usage.prompt_tokens},
        {"completion_tokens", entry.usage.completion_tokens}}},
      {"warnings", entry.warnings},
  };
  if (entry.parsed_summary) {
    doc["parsed_summary"] = *entry.parsed_summary;
  }
  return doc;
}

}  // namespace

nlohmann::json entry_to_json(const TranscriptEntry& entry) {
  nlohmann::json doc = entry_core_json(entry);
  doc["started_at_us"] = entry.started_at_us;
  doc["ended_at_us"] = entry.ended_at_us;
  return doc;
}

nlohmann::json entry_to_canonical_json(const TranscriptEntry& entry) {
  return entry_core_json(entry);
}

std::string canonical_line(const TranscriptEntry& entry) {
  return dump_compact(entry_to_canonical_json(entry));
}

TranscriptEntry entry_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw TranscriptError("record is not a JSON object");
  }
  const int version = doc.value("schema_version", -1);
  if (version != kTranscriptSchemaVersion) {
    throw TranscriptError("unsupported schema_version " + std::to_string(version));
  }
  TranscriptEntry entry;
  try {
    entry.run_id = doc.at("run_id").get<std::string>();
    entry.task_id = doc.at("task_id").get<std::string>();
    entry.seq = doc.at("seq").get<std::int64_t>();
    auto stage = stage_from_string(doc.at("stage").get<std::string>());
    if (!stage) {
      throw TranscriptError("unknown stage label");
    }
    entry.stage = *stage;
    entry.iteration = doc.at("iteration").get<int>();
    entry.rendered_prompt = messages_from_json(doc.at("rendered_prompt"));
    entry.raw_output = doc.at("raw_output").get<std::string>();
    if (doc.contains("parsed_summary")) {
      entry.parsed_summary = doc.at("parsed_summary").get<std::string>();
    }
    entry.usage.prompt_tokens = doc.at("usage").value("prompt_tokens", 0);
    entry.usage.completion_tokens = doc.at("usage").value("completion_tokens", 0);
    entry.started_at_us = doc.value("started_at_us", std::int64_t{0});
    entry.ended_at_us = doc.value("ended_at_us", std::int64_t{0});
    entry.warnings = doc.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& error) {
    throw TranscriptError(std::string("malformed record: ") + error.what());
  }
  return entry;
}

TranscriptWriter::TranscriptWriter(std::string path, std::string run_id)
    : path_(std::move(path)), run_id_(std::move(run_id)) {
  std::filesystem::path parent = std::filesystem::path(path_).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  out_.open(path_, std::ios::binary | std::ios::trunc);
  if (!out_) {
    throw TranscriptError("cannot open transcript for writing: " + path_);
  }
  out_.flush();
}

void TranscriptWriter::append(const TranscriptEntry& entry) {
  if (entry.run_id != run_id_) {
    throw TranscriptError("entry run_id '" + entry.run_id + "' does not match writer run '" +
                          run_id_ + "'");
  }
  if (entry.seq != next_seq_) {
    throw TranscriptError("sequence violation: expected seq " + std::to_string(next_seq_) +
                          ", got " + std::to_string(entry.seq));
  }
  out_ << dump_compact(entry_to_json(entry)) << '\n';
  out_.flush();
  if (!out_) {
    throw TranscriptError("write failed: " + path_);
  }
  ++next_seq_;
}

std::string transcript_path(const std::string& dir, const std::string& run_id) {
  return (std::filesystem::path(dir) / (run_id + ".jsonl")).string();
}

LoadedRun load_run_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TranscriptError("transcript not found: " + path);
  }
  LoadedRun run;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
      run.corrupt_lines.push_back({line_number, "not valid JSON"});
      continue;
    }
    try {
      run.entries.push_back(entry_from_json(doc));
    } catch (const TranscriptError& error) {
      run.corrupt_lines.push_back({line_number, error.what()});
    }
  }
  return run;
}

LoadedRun load_run(const std::string& dir, const std::string& run_id) {
  return load_run_file(transcript_path(dir, run_id));
}

}  // namespace dualreflect
