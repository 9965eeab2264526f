#include "dualreflect/analyze.hpp"

#include <cstdio>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dualreflect/error.hpp"
#include "dualreflect/transcript.hpp"

namespace dualreflect {
namespace {

struct ResultRow {
  std::string task_id;
  int index = 0;
  std::string status;
  std::string source;
  std::optional<std::string> reference;
  std::string final_translation;
};

struct RunData {
  std::string dir;
  std::string run_name;
  std::vector<ResultRow> rows;  // corpus order
  std::map<std::string, std::size_t> by_id;
};

RunData load_run_dir(const std::string& dir) {
  RunData run;
  run.dir = dir;
  const std::string results_path = (std::filesystem::path(dir) / "results.jsonl").string();
  std::ifstream in(results_path, std::ios::binary);
  if (!in) {
    throw ValidationError("not a batch directory (missing results.jsonl): " + dir);
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
      throw ValidationError("corrupt results line in " + results_path);
    }
    ResultRow row;
    row.task_id = doc.at("task_id").get<std::string>();
    row.index = doc.value("index", 0);
    row.status = doc.value("status", "");
    row.source = doc.value("source", "");
    row.final_translation = doc.value("final_translation", "");
    if (doc.contains("reference")) row.reference = doc.at("reference").get<std::string>();
    run.by_id[row.task_id] = run.rows.size();
    run.rows.push_back(std::move(row));
  }

  const std::string manifest_path =
      (std::filesystem::path(dir) / "run_manifest.json").string();
  std::ifstream manifest_in(manifest_path, std::ios::binary);
  if (manifest_in) {
    nlohmann::json manifest =
        nlohmann::json::parse(manifest_in, nullptr, /*allow_exceptions=*/false);
    if (!manifest.is_discarded() && manifest.is_object()) {
      run.run_name = manifest.value("run_name", "");
    }
  }
  return run;
}

void require_same_corpus(const RunData& ours, const RunData& baseline) {
  for (const ResultRow& row : ours.rows) {
    if (!baseline.by_id.count(row.task_id)) {
      throw ValidationError("corpus mismatch: " + row.task_id + " present in " + ours.dir +
                            " but missing from " + baseline.dir);
    }
  }
  for (const ResultRow& row : baseline.rows) {
    if (!ours.by_id.count(row.task_id)) {
      throw ValidationError("corpus mismatch: " + row.task_id + " present in " + baseline.dir +
                            " but missing from " + ours.dir);
    }
  }
  for (const ResultRow& row : ours.rows) {
    const ResultRow& other = baseline.rows[baseline.by_id.at(row.task_id)];
    if (row.source != other.source) {
      throw ValidationError("corpus mismatch: " + row.task_id +
                            " has different source texts across runs");
    }
  }
}

// External score files carry one value per line, aligned with the run's
// export manifest.
std::map<std::string, double> load_scores(const RunData& run, const std::string& score_path) {
  const std::string manifest_path =
      (std::filesystem::path(run.dir) / "export" / (run.run_name + ".manifest.json")).string();
  std::ifstream manifest_in(manifest_path, std::ios::binary);
  if (!manifest_in) {
    throw ValidationError("missing export manifest (needed to align scores): " + manifest_path);
  }
  nlohmann::json manifest = nlohmann::json::parse(manifest_in, nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("line_tasks")) {
    throw ValidationError("malformed export manifest: " + manifest_path);
  }
  const auto& line_tasks = manifest.at("line_tasks");

  std::ifstream scores_in(score_path, std::ios::binary);
  if (!scores_in) {
    throw ValidationError("cannot open score file: " + score_path);
  }
  std::map<std::string, double> scores;
  std::string line;
  std::size_t i = 0;
  while (std::getline(scores_in, line)) {
    if (trim_copy(line).empty()) continue;
    if (i >= line_tasks.size()) {
      throw ValidationError("score file has more lines than the export: " + score_path);
    }
    scores[line_tasks.at(i).get<std::string>()] = std::stod(line);
    ++i;
  }
  if (i != line_tasks.size()) {
    throw ValidationError("score file has fewer lines than the export: " + score_path);
  }
  return scores;
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

AnalysisReport analyze_runs(const AnalysisOptions& options) {
  RunData ours = load_run_dir(options.run_dir);
  RunData baseline = load_run_dir(options.baseline_dir);
  require_same_corpus(ours, baseline);

  const bool external =
      options.score_files.count("ours") || options.score_files.count("baseline");
  if (external &&
      (!options.score_files.count("ours") || !options.score_files.count("baseline"))) {
    throw ValidationError("external scoring needs both 'ours' and 'baseline' score files");
  }

  AnalysisReport report;
  report.metric_id = external ? "external" : "chrf";

  std::map<std::string, double> ours_scores;
  std::map<std::string, double> baseline_scores;
  std::map<std::string, double> disparity_scores;
  if (external) {
    ours_scores = load_scores(ours, options.score_files.at("ours"));
    baseline_scores = load_scores(baseline, options.score_files.at("baseline"));
  }
  if (options.score_files.count("disparity")) {
    disparity_scores = load_scores(ours, options.score_files.at("disparity"));
  }

  const std::string transcripts_dir =
      (std::filesystem::path(ours.dir) / "transcripts").string();

  std::map<int, std::vector<double>> curve_samples;

  for (const ResultRow& row : ours.rows) {
    const ResultRow& base_row = baseline.rows[baseline.by_id.at(row.task_id)];
    if (row.status != "ok" || base_row.status != "ok") continue;

    DisparityRecord record;
    record.task_id = row.task_id;

    // Improvement over the baseline output on the same segment.
    if (external) {
      if (!ours_scores.count(row.task_id) || !baseline_scores.count(row.task_id)) {
        throw ValidationError("missing scores for " + row.task_id);
      }
      record.delta_c = delta_c({ours_scores.at(row.task_id), "external"},
                               {baseline_scores.at(row.task_id), "external"});
    } else {
      if (!row.reference) {
        throw ValidationError("missing scores: " + row.task_id +
                              " has no reference for the built-in metric and no score file "
                              "was given");
      }
      record.delta_c = delta_c(chrf(row.final_translation, *row.reference),
                               chrf(base_row.final_translation, *row.reference));
    }

    // Disparity between the source and its first round-trip.
    LoadedRun transcript = load_run(transcripts_dir, row.task_id);
    if (disparity_scores.count(row.task_id)) {
      record.delta_d = 100.0 - disparity_scores.at(row.task_id);
      record.iteration_observed = 1;
    } else {
      const TranscriptEntry* first_back = nullptr;
      for (const TranscriptEntry& entry : transcript.entries) {
        if (entry.stage == Stage::Back) {
          first_back = &entry;
          break;
        }
      }
      if (!first_back) {
        throw ValidationError("missing scores: " + row.task_id +
                              " has no back-translation entry to compute disparity from");
      }
      record.delta_d =
          delta_d(row.source, first_back->raw_output,
                  [](const std::string& hyp, const std::string& ref) {
                    return chrf_score(hyp, ref);
                  });
      record.iteration_observed = first_back->iteration;
    }
    report.records.push_back(record);

    // Per-iteration quality, available when the run recorded an extraction
    // per round and the corpus carries references.
    if (row.reference) {
      std::vector<const TranscriptEntry*> extracts;
      for (const TranscriptEntry& entry : transcript.entries) {
        if (entry.stage == Stage::Extract && entry.parsed_summary) {
          extracts.push_back(&entry);
        }
      }
      if (extracts.size() > 1) {
        for (const TranscriptEntry* entry : extracts) {
          curve_samples[entry->iteration].push_back(
              chrf_score(*entry->parsed_summary, *row.reference));
        }
      }
    }
  }

  for (const auto& [iteration, samples] : curve_samples) {
    report.iteration_curve.push_back(
        {iteration, mean_of(samples), static_cast<int>(samples.size())});
  }

  if (report.records.size() >= 2) {
    try {
      report.pearson_r = pearson(report.records);
      report.pearson_defined = true;
    } catch (const DegenerateSample&) {
      report.pearson_defined = false;
    }
  }
  return report;
}

std::string format_report_text(const AnalysisReport& report) {
  std::ostringstream out;
  out << "metric: " << report.metric_id << "\n";
  out << "tasks analyzed: " << report.records.size() << "\n\n";
  out << "task_id          delta_d    delta_c\n";
  for (const DisparityRecord& record : report.records) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-14s %9.3f %10.3f\n", record.task_id.c_str(),
                  record.delta_d, record.delta_c);
    out << line;
  }
  out << "\npearson r: ";
  if (report.pearson_defined) {
    char value[32];
    std::snprintf(value, sizeof(value), "%.4f", report.pearson_r);
    out << value << "\n";
  } else {
    out << "undefined (degenerate sample)\n";
  }
  if (!report.iteration_curve.empty()) {
    out << "\nper-iteration score curve:\n";
    for (const IterationPoint& point : report.iteration_curve) {
      char line[64];
      std::snprintf(line, sizeof(line), "  iteration %d: %8.3f (n=%d)\n", point.iteration,
                    point.mean_score, point.samples);
      out << line;
    }
  }
  return out.str();
}

nlohmann::json report_to_json(const AnalysisReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const DisparityRecord& record : report.records) {
    records.push_back({{"task_id", record.task_id},
                       {"delta_d", record.delta_d},
                       {"delta_c", record.delta_c},
                       {"iteration_observed", record.iteration_observed}});
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const IterationPoint& point : report.iteration_curve) {
    curve.push_back({{"iteration", point.iteration},
                     {"mean_score", point.mean_score},
                     {"samples", point.samples}});
  }
  nlohmann::json doc = {
      {"metric", report.metric_id},
      {"records", std::move(records)},
      {"iteration_curve", std::move(curve)},
  };
  if (report.pearson_defined) {
    doc["pearson_r"] = report.pearson_r;
  } else {
    doc["pearson_r"] = nullptr;
  }
  return doc;
}

}  // namespace dualreflect
