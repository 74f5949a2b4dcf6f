#include "traceforge/datastore.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "traceforge/prompts.hpp"
#include "traceforge/util.hpp"

namespace traceforge {

namespace {

const char* kDocumentKeys[] = {"id", "source_uri", "text", "domain_tag"};
const char* kExampleKeys[] = {"id", "instruction", "trajectory", "provenance", "token_count"};

json strip_known(const json& j, const char* const* keys, size_t count) {
    json extra = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (size_t k = 0; k < count; ++k) {
            if (it.key() == keys[k]) { known = true; break; }
        }
        if (!known) extra[it.key()] = it.value();
    }
    return extra;
}

template <typename T, typename ToJson>
void save_jsonl(const std::vector<T>& rows, const std::string& path, ToJson to_json_fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& row : rows) {
        out << to_json_fn(row).dump() << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

template <typename T, typename FromJson>
std::vector<T> load_jsonl(const std::string& path, FromJson from_json_fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<T> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            rows.push_back(from_json_fn(json::parse(line)));
        } catch (const std::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace

json document_to_json(const Document& doc) {
    return {{"id", doc.id},
            {"source_uri", doc.source_uri},
            {"text", doc.text},
            {"domain_tag", doc.domain_tag}};
}

Document document_from_json(const json& j) {
    Document doc;
    doc.id = j.at("id").get<std::string>();
    doc.source_uri = j.value("source_uri", std::string{});
    doc.text = j.at("text").get<std::string>();
    doc.domain_tag = j.value("domain_tag", std::string{});
    if (doc.text.empty()) throw StructuralError("document text must be non-empty");
    return doc;
}

json trajectory_to_json(const Trajectory& traj) {
    json items = json::array();
    for (size_t k = 0; k < traj.observations.size(); ++k) {
        items.push_back({{"type", "observation"},
                         {"text", traj.observations[k].text},
                         {"step_index", traj.observations[k].step_index}});
        if (k < traj.actions.size()) {
            items.push_back({{"type", "action"},
                             {"raw", traj.actions[k].raw},
                             {"kind", traj.actions[k].kind == ActionKind::Stop ? "stop" : "command"}});
        }
    }
    return items;
}

Trajectory trajectory_from_json(const json& j) {
    Trajectory traj;
    bool expect_observation = true;
    for (const auto& item : j) {
        const std::string type = item.at("type").get<std::string>();
        if (type == "observation") {
            if (!expect_observation) throw StructuralError("two adjacent observations");
            traj.observations.push_back(Observation{item.at("text").get<std::string>(),
                                                    item.at("step_index").get<int>()});
        } else if (type == "action") {
            if (expect_observation) throw StructuralError("action where an observation belongs");
            Action action = Action::from_raw(item.at("raw").get<std::string>());
            const std::string kind = item.at("kind").get<std::string>();
            if ((kind == "stop") != (action.kind == ActionKind::Stop)) {
                throw StructuralError("action kind does not match its text: " + action.raw);
            }
            traj.actions.push_back(std::move(action));
        } else {
            throw StructuralError("unknown trajectory item type: " + type);
        }
        expect_observation = !expect_observation;
    }
    if (!traj.well_formed()) {
        throw StructuralError("trajectory is not a well-formed alternating sequence");
    }
    return traj;
}

json example_to_json(const Example& example) {
    json j = example.extra;
    j["id"] = example.id;
    j["instruction"] = example.instruction;
    j["trajectory"] = trajectory_to_json(example.trajectory);
    j["provenance"] = {{"doc_id", example.provenance.doc_id},
                       {"parent_trajectory_id", example.provenance.parent_trajectory_id},
                       {"span_start", example.provenance.span_start},
                       {"span_end", example.provenance.span_end},
                       {"kind", to_string(example.provenance.kind)}};
    j["token_count"] = example.token_count;
    return j;
}

Example example_from_json(const json& j) {
    Example example;
    example.id = j.at("id").get<std::string>();
    example.instruction = j.at("instruction").get<std::string>();
    example.trajectory = trajectory_from_json(j.at("trajectory"));
    const json& p = j.at("provenance");
    example.provenance.doc_id = p.at("doc_id").get<std::string>();
    example.provenance.parent_trajectory_id = p.at("parent_trajectory_id").get<std::string>();
    example.provenance.span_start = p.at("span_start").get<int>();
    example.provenance.span_end = p.at("span_end").get<int>();
    example.provenance.kind = instruction_kind_from_string(p.at("kind").get<std::string>());
    if (example.provenance.span_start >= example.provenance.span_end) {
        throw StructuralError("provenance span must satisfy span_start < span_end");
    }
    example.token_count = j.at("token_count").get<int>();
    if (example.token_count < 0) throw StructuralError("token_count must be non-negative");
    example.extra = strip_known(j, kExampleKeys, std::size(kExampleKeys));
    return example;
}

json raw_trajectory_to_json(const RawTrajectory& raw) {
    return {{"id", raw.id},
            {"doc_id", raw.doc_id},
            {"instruction", raw.instruction},
            {"termination", to_string(raw.termination)},
            {"trajectory", trajectory_to_json(raw.trajectory)}};
}

RawTrajectory raw_trajectory_from_json(const json& j) {
    RawTrajectory raw;
    raw.id = j.at("id").get<std::string>();
    raw.doc_id = j.at("doc_id").get<std::string>();
    raw.instruction = j.at("instruction").get<std::string>();
    raw.termination = termination_from_string(j.at("termination").get<std::string>());
    raw.trajectory = trajectory_from_json(j.at("trajectory"));
    return raw;
}

void save_documents(const std::vector<Document>& docs, const std::string& path) {
    save_jsonl(docs, path, document_to_json);
}

std::vector<Document> load_documents(const std::string& path) {
    auto docs = load_jsonl<Document>(path, document_from_json);
    std::set<std::string> ids;
    for (const auto& doc : docs) {
        if (!ids.insert(doc.id).second) {
            throw IoError("duplicate document id in " + path + ": " + doc.id);
        }
    }
    return docs;
}

void save_examples(const std::vector<Example>& examples, const std::string& path) {
    save_jsonl(examples, path, example_to_json);
}

std::vector<Example> load_examples(const std::string& path) {
    return load_jsonl<Example>(path, example_from_json);
}

void save_raw_trajectories(const std::vector<RawTrajectory>& rows, const std::string& path) {
    save_jsonl(rows, path, raw_trajectory_to_json);
}

std::vector<RawTrajectory> load_raw_trajectories(const std::string& path) {
    return load_jsonl<RawTrajectory>(path, raw_trajectory_from_json);
}

SftExport export_sft(const std::vector<Example>& examples, const std::string& system_message) {
    prompts::ActPromptOptions options;
    if (!system_message.empty()) options.system_message = system_message;
    SftExport out;
    for (const auto& example : examples) {
        const int n = action_count(example.trajectory);
        if (n == 0) {
            ++out.skipped_zero_action;
            continue;
        }
        prompts::History history;
        for (int k = 0; k < n; ++k) {
            const auto& obs = example.trajectory.observations[static_cast<size_t>(k)];
            const auto& action = example.trajectory.actions[static_cast<size_t>(k)];
            SftPair pair;
            pair.input = prompts::render_act(example.instruction, history, obs.text, {}, options);
            pair.output =
                prompts::format_reason_action(kTrajectoryReasonPlaceholder, action.raw);
            out.pairs.push_back(std::move(pair));
            history.emplace_back(obs.text, action.raw);
        }
    }
    return out;
}

void save_sft(const std::vector<SftPair>& pairs, const std::string& path) {
    save_jsonl(pairs, path, [](const SftPair& p) {
        return json{{"input", p.input}, {"output", p.output}};
    });
}

std::vector<SftPair> load_sft(const std::string& path) {
    return load_jsonl<SftPair>(path, [](const json& j) {
        return SftPair{j.at("input").get<std::string>(), j.at("output").get<std::string>()};
    });
}

json DatasetManifest::to_json() const {
    return {{"counts",
             {{"documents", documents},
              {"raw_trajectories", raw_trajectories},
              {"examples", examples},
              {"filtered_examples", filtered_examples}}},
            {"config_fingerprint", config_fingerprint},
            {"created_at", created_at}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
    DatasetManifest m;
    const json& counts = j.at("counts");
    m.documents = counts.at("documents").get<long>();
    m.raw_trajectories = counts.at("raw_trajectories").get<long>();
    m.examples = counts.at("examples").get<long>();
    m.filtered_examples = counts.at("filtered_examples").get<long>();
    m.config_fingerprint = j.value("config_fingerprint", std::string{});
    m.created_at = j.value("created_at", std::string{});
    return m;
}

long count_jsonl_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    long count = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++count;
    }
    return count;
}

namespace {
long count_or_zero(const std::string& path, bool missing_ok) {
    if (path.empty()) return 0;
    std::ifstream probe(path);
    if (!probe && missing_ok) return 0;
    return count_jsonl_records(path);
}
}  // namespace

DatasetManifest make_manifest(const DatasetPaths& paths, const std::string& fingerprint,
                              bool missing_files_are_zero) {
    DatasetManifest m;
    m.documents = count_or_zero(paths.documents, missing_files_are_zero);
    m.raw_trajectories = count_or_zero(paths.raw_trajectories, missing_files_are_zero);
    m.examples = count_or_zero(paths.examples, missing_files_are_zero);
    m.filtered_examples = count_or_zero(paths.filtered_examples, missing_files_are_zero);
    m.config_fingerprint = fingerprint;
    m.created_at = iso8601_now();
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << manifest.to_json().dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid manifest JSON in " + path + ": " + e.what());
    }
    return DatasetManifest::from_json(j);
}

std::string config_fingerprint(const json& canonical_config) {
    return fnv1a64_hex(canonical_config.dump());
}

std::string iso8601_now() {
    std::time_t now = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        long long fixed = std::strtoll(epoch, &end, 10);
        if (end != epoch) now = static_cast<std::time_t>(fixed);
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buffer);
}

std::string format_stats_table(const DatasetManifest& manifest) {
    const char* headers[] = {"documents", "raw_trajectories", "examples", "filtered_examples"};
    std::string values[] = {format_with_commas(manifest.documents),
                            format_with_commas(manifest.raw_trajectories),
                            format_with_commas(manifest.examples),
                            format_with_commas(manifest.filtered_examples)};
    std::ostringstream out;
    for (int col = 0; col < 4; ++col) {
        size_t width = std::max(std::string(headers[col]).size(), values[col].size());
        if (col > 0) out << "  ";
        out << headers[col] << std::string(width - std::string(headers[col]).size(), ' ');
    }
    out << "\n";
    for (int col = 0; col < 4; ++col) {
        size_t width = std::max(std::string(headers[col]).size(), values[col].size());
        if (col > 0) out << "  ";
        out << values[col] << std::string(width - values[col].size(), ' ');
    }
    out << "\n";
    return out.str();
}

}  // namespace traceforge
