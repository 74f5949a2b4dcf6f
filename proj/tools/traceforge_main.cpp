// traceforge: synthesize agent training data from simulated interactions,
// filter it, index it, and serve it back through retrieval-augmented runs.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "CLI11.hpp"

#include "traceforge/config.hpp"
#include "traceforge/curator.hpp"
#include "traceforge/datastore.hpp"
#include "traceforge/env.hpp"
#include "traceforge/retrieval.hpp"
#include "traceforge/runtime.hpp"
#include "traceforge/synthesizer.hpp"
#include "traceforge/util.hpp"

namespace fs = std::filesystem;
using namespace traceforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;
constexpr int kExitParseAbort = 4;
constexpr int kExitMaxSteps = 5;

struct GlobalFlags {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> provider;
    std::optional<std::string> out_dir;
    std::optional<int> instructions_per_doc;
    std::optional<int> max_steps;
    std::optional<int> m1;
    std::optional<int> m2;
    std::optional<int> context_budget;
    std::optional<std::string> mode;
};

PipelineConfig effective_config(const GlobalFlags& flags) {
    PipelineConfig config = load_config(flags.config_path);
    if (flags.seed) { config.seed = *flags.seed; config.synthesis.seed = *flags.seed; }
    if (flags.jobs) config.jobs = *flags.jobs;
    if (flags.provider) config.provider = *flags.provider;
    if (flags.out_dir) config.paths.out_dir = *flags.out_dir;
    if (flags.instructions_per_doc) config.synthesis.instructions_per_doc = *flags.instructions_per_doc;
    if (flags.max_steps) {
        config.synthesis.max_steps = *flags.max_steps;
        config.runtime.max_steps = *flags.max_steps;
    }
    if (flags.m1) { config.retrieval.m1 = *flags.m1; config.runtime.m1 = *flags.m1; }
    if (flags.m2) { config.retrieval.m2 = *flags.m2; config.runtime.m2 = *flags.m2; }
    if (flags.context_budget) config.runtime.context_budget_tokens = *flags.context_budget;
    if (flags.mode) config.runtime.mode = agent_mode_from_string(*flags.mode);
    config.validate();
    return config;
}

std::unique_ptr<Provider> make_provider(const PipelineConfig& config) {
    if (config.provider == "mock") {
        return std::make_unique<MockProvider>(ScriptedMockTable::load(config.paths.mock_table));
    }
    return std::make_unique<HttpProvider>(config.providers.at(config.provider));
}

EnvFactory make_env_factory(const PipelineConfig& config) {
    if (config.paths.world.empty()) throw ConfigError("paths.world is required");
    auto spec = std::make_shared<SimWorldSpec>(load_world(config.paths.world));
    auto counter = std::make_shared<std::atomic<int>>(0);
    return [spec, counter]() -> std::unique_ptr<Env> {
        int n = counter->fetch_add(1);
        return std::make_unique<SimEnv>(*spec, "sim-" + std::to_string(n));
    };
}

void write_manifest(const PipelineConfig& config, const OutLayout& out) {
    DatasetPaths paths{config.paths.docs, out.raw_trajectories, out.examples,
                       out.filtered_examples};
    DatasetManifest manifest =
        make_manifest(paths, config_fingerprint(config.semantic_json()), true);
    save_manifest(manifest, out.manifest);
}

int cmd_synth(const PipelineConfig& config) {
    if (config.paths.docs.empty()) throw ConfigError("paths.docs is required");
    auto docs = load_documents(config.paths.docs);
    auto provider = make_provider(config);
    auto env_factory = make_env_factory(config);
    fs::create_directories(config.paths.out_dir);
    OutLayout out = OutLayout::in(config.paths.out_dir);

    SynthesisOutput result = synthesize_corpus(docs, config.synthesis, env_factory, *provider,
                                               &std::cerr, config.jobs);
    save_raw_trajectories(result.raw.trajectories, out.raw_trajectories);
    save_examples(result.examples, out.examples);
    write_manifest(config, out);

    log_event(&std::cerr, "synth_done",
              {{"docs", result.raw.counters.docs_seen},
               {"instructions", result.raw.counters.instructions_proposed},
               {"rollouts", result.raw.counters.rollouts_completed},
               {"examples", result.examples.size()}});
    std::cout << "synthesized " << result.examples.size() << " examples from "
              << result.raw.trajectories.size() << " rollouts\n";
    return kExitOk;
}

int cmd_filter(const PipelineConfig& config) {
    if (config.committee.members.empty()) throw ConfigError("committee.members is required");
    OutLayout out = OutLayout::in(config.paths.out_dir);
    auto examples = load_examples(out.examples);
    auto provider = make_provider(config);

    FilterReport report;
    auto kept = filter_corpus(examples, config.committee, *provider, &report, &std::cerr,
                              config.jobs);
    save_examples(kept, out.filtered_examples);
    {
        std::ofstream report_out(out.filter_report, std::ios::binary);
        if (!report_out) throw IoError("cannot write " + out.filter_report);
        report_out << report.to_json().dump(2) << "\n";
    }
    write_manifest(config, out);
    std::cout << "kept " << report.passed << " of " << report.input_examples << " examples\n";
    return kExitOk;
}

int cmd_index(const PipelineConfig& config) {
    OutLayout out = OutLayout::in(config.paths.out_dir);
    auto examples = load_examples(out.filtered_examples);
    if (examples.empty()) throw PreconditionError("no examples to index in " + out.filtered_examples);

    SparseIndex sparse = build_sparse(examples, config.retrieval.k1, config.retrieval.b);
    save_sparse(sparse, out.sparse_index);

    HashedBagEmbedder embedder;
    DenseIndex dense = build_dense(examples, embedder);
    save_dense(dense, out.dense_index);

    std::cout << "indexed " << examples.size() << " examples\n";
    return kExitOk;
}

int cmd_run(const PipelineConfig& config, const std::string& instruction,
            const std::string& trace_path) {
    OutLayout out = OutLayout::in(config.paths.out_dir);
    auto provider = make_provider(config);
    auto env_factory = make_env_factory(config);
    auto env = env_factory();

    RuntimeConfig runtime = config.runtime;
    ExampleStore store;
    SparseIndex sparse;
    DenseIndex dense;
    HashedBagEmbedder embedder;
    RetrievalIndexes indexes;
    if (runtime.mode == AgentMode::AgenticRetrieval) {
        store = make_example_store(load_examples(out.filtered_examples));
        sparse = load_sparse(out.sparse_index);
        dense = load_dense(out.dense_index);
        indexes = RetrievalIndexes{&sparse, &dense, &embedder};
    }

    EpisodeOutput episode = run_episode(*env, instruction, runtime, indexes, store, *provider,
                                        &std::cerr);
    save_trace(episode.turns, trace_path.empty() ? out.trace : trace_path);

    std::cout << "episode finished: " << to_string(episode.result.termination) << " after "
              << episode.turns.size() << " turns\n";
    switch (episode.result.termination) {
        case Termination::Aborted: return kExitParseAbort;
        case Termination::MaxSteps: return kExitMaxSteps;
        default: return kExitOk;
    }
}

int cmd_export(const PipelineConfig& config) {
    OutLayout out = OutLayout::in(config.paths.out_dir);
    auto examples = load_examples(out.filtered_examples);
    SftExport result = export_sft(examples, config.runtime.system_message);
    save_sft(result.pairs, out.sft);
    std::cout << "exported " << result.pairs.size() << " pairs (skipped "
              << result.skipped_zero_action << " zero-action examples)\n";
    return kExitOk;
}

int cmd_stats(const PipelineConfig& config) {
    OutLayout out = OutLayout::in(config.paths.out_dir);
    DatasetPaths paths{config.paths.docs, out.raw_trajectories, out.examples,
                       out.filtered_examples};
    DatasetManifest manifest =
        make_manifest(paths, config_fingerprint(config.semantic_json()), true);
    std::cout << format_stats_table(manifest);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agent data synthesis, filtering, indexing and retrieval-augmented runs"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "pipeline config JSON")->required();
    app.add_option("--seed", flags.seed, "override config seed");
    app.add_option("--jobs", flags.jobs, "worker threads for synth/filter");
    app.add_option("--provider", flags.provider, "provider id or 'mock'");
    app.add_option("--out", flags.out_dir, "override output directory");
    app.add_option("--instructions-per-doc", flags.instructions_per_doc,
                   "override synthesis.instructions_per_doc");
    app.add_option("--max-steps", flags.max_steps, "override max steps per episode");
    app.add_option("--m1", flags.m1, "override observation-based retrieval cap");
    app.add_option("--m2", flags.m2, "override model-based retrieval cap");
    app.add_option("--context-budget", flags.context_budget, "override context token budget");
    app.add_option("--mode", flags.mode, "zero_shot | agentic_retrieval");

    auto* synth = app.add_subcommand("synth", "synthesize examples from documents");
    auto* filter = app.add_subcommand("filter", "filter synthesized examples");
    auto* index = app.add_subcommand("index", "build sparse and dense indexes");
    auto* run = app.add_subcommand("run", "run one agent episode in the sim world");
    auto* export_cmd = app.add_subcommand("export", "export filtered examples to SFT pairs");
    auto* stats = app.add_subcommand("stats", "print the dataset accounting table");

    std::string instruction;
    std::string trace_path;
    run->add_option("--instruction", instruction, "task instruction")->required();
    run->add_option("--trace-out", trace_path, "trace output path");

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig config = effective_config(flags);
        if (synth->parsed()) return cmd_synth(config);
        if (filter->parsed()) return cmd_filter(config);
        if (index->parsed()) return cmd_index(config);
        if (run->parsed()) return cmd_run(config, instruction, trace_path);
        if (export_cmd->parsed()) return cmd_export(config);
        if (stats->parsed()) return cmd_stats(config);
        std::cerr << "no subcommand\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParseAbort;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
