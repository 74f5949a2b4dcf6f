#pragma once

#include <map>
#include <string>

#include "traceforge/curator.hpp"
#include "traceforge/gateway.hpp"
#include "traceforge/runtime.hpp"
#include "traceforge/synthesizer.hpp"

namespace traceforge {

/// Whole-pipeline configuration loaded from one JSON file. Unknown keys
/// are rejected; relative paths resolve against the config file directory.
struct PipelineConfig {
    struct Paths {
        std::string docs;
        std::string world;
        std::string out_dir = "out";
        std::string mock_table;
    } paths;

    struct RetrievalParams {
        double k1 = 1.2;
        double b = 0.75;
        int m1 = 5;
        int m2 = 5;
    } retrieval;

    SynthesisConfig synthesis;
    CommitteeConfig committee;
    RuntimeConfig runtime;
    std::map<std::string, ProviderConfig> providers;
    std::string provider = "mock";
    uint64_t seed = 0;
    int jobs = 1;

    void validate() const;

    /// Canonical JSON of the semantic settings (paths and jobs excluded);
    /// the fingerprint input.
    json semantic_json() const;

    static PipelineConfig from_json(const json& j, const std::string& base_dir);
};

PipelineConfig load_config(const std::string& path);

/// Artifact names within the configured output directory.
struct OutLayout {
    std::string raw_trajectories;
    std::string examples;
    std::string filtered_examples;
    std::string filter_report;
    std::string sparse_index;
    std::string dense_index;
    std::string sft;
    std::string manifest;
    std::string trace;

    static OutLayout in(const std::string& out_dir);
};

}  // namespace traceforge
