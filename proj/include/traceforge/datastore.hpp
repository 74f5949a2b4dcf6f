#pragma once

#include <string>
#include <vector>

#include "traceforge/core.hpp"
#include "traceforge/synthesizer.hpp"

namespace traceforge {

json document_to_json(const Document& doc);
Document document_from_json(const json& j);

json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& j);

json example_to_json(const Example& example);
Example example_from_json(const json& j);

json raw_trajectory_to_json(const RawTrajectory& raw);
RawTrajectory raw_trajectory_from_json(const json& j);

/// JSONL writers/readers: one record per line, UTF-8, LF endings. Readers
/// throw IoError naming the 1-based line number of a malformed record.
/// Unknown fields on Document/Example records survive a round-trip.
void save_documents(const std::vector<Document>& docs, const std::string& path);
std::vector<Document> load_documents(const std::string& path);

void save_examples(const std::vector<Example>& examples, const std::string& path);
std::vector<Example> load_examples(const std::string& path);

void save_raw_trajectories(const std::vector<RawTrajectory>& rows, const std::string& path);
std::vector<RawTrajectory> load_raw_trajectories(const std::string& path);

/// One supervised fine-tuning record: an action-prediction prompt and the
/// REASON/ACTION completion for the next action.
struct SftPair {
    std::string input;
    std::string output;

    bool operator==(const SftPair&) const = default;
};

inline constexpr char kTrajectoryReasonPlaceholder[] = "(from trajectory)";

struct SftExport {
    std::vector<SftPair> pairs;
    long skipped_zero_action = 0;
};

/// Converts examples to action-prediction pairs: an example with n actions
/// yields n pairs, pair k holding the prompt at step k (history = first
/// k-1 turns) and the REASON/ACTION text for action k. Zero-action
/// examples are skipped and counted.
SftExport export_sft(const std::vector<Example>& examples,
                     const std::string& system_message = "");

void save_sft(const std::vector<SftPair>& pairs, const std::string& path);
std::vector<SftPair> load_sft(const std::string& path);

struct DatasetManifest {
    long documents = 0;
    long raw_trajectories = 0;
    long examples = 0;
    long filtered_examples = 0;
    std::string config_fingerprint;
    std::string created_at;

    json to_json() const;
    static DatasetManifest from_json(const json& j);
};

struct DatasetPaths {
    std::string documents;
    std::string raw_trajectories;
    std::string examples;
    std::string filtered_examples;
};

/// Counts one record per non-empty line. Missing path strings count as
/// zero; a named file that cannot be opened is an IoError.
long count_jsonl_records(const std::string& path);

/// Builds the dataset accounting row by streaming the four JSONL files.
/// Files whose path is empty or absent-but-optional contribute zero.
DatasetManifest make_manifest(const DatasetPaths& paths, const std::string& config_fingerprint,
                              bool missing_files_are_zero = false);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

/// Fingerprint of the semantic configuration (an FNV-1a hash of its
/// canonical JSON). Stable across reruns with the same settings.
std::string config_fingerprint(const json& canonical_config);

/// Current UTC time as ISO-8601. Honors SOURCE_DATE_EPOCH so reruns can
/// produce byte-identical artifacts.
std::string iso8601_now();

/// Four-column accounting table: documents, raw trajectories, examples,
/// filtered examples.
std::string format_stats_table(const DatasetManifest& manifest);

}  // namespace traceforge
