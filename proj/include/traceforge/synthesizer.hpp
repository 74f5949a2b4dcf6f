#pragma once

#include <functional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "traceforge/core.hpp"
#include "traceforge/env.hpp"
#include "traceforge/gateway.hpp"

namespace traceforge {

struct SynthesisConfig {
    int instructions_per_doc = 3;   // N
    int max_steps = 20;             // m, per rollout
    std::set<InstructionKind> kinds = {InstructionKind::Summary, InstructionKind::Abstraction};
    uint64_t seed = 0;
    /// When set, the original self-instruct instruction is also kept as a
    /// full-span example of kind Original.
    bool keep_original = false;

    void validate() const;
};

/// One completed rollout before backward construction.
struct RawTrajectory {
    std::string id;
    std::string doc_id;
    std::string instruction;
    Termination termination = Termination::StopPredicted;
    Trajectory trajectory;

    bool operator==(const RawTrajectory&) const = default;
};

struct RawBatchCounters {
    long docs_seen = 0;
    long instructions_proposed = 0;
    long rollouts_completed = 0;
};

struct RawBatch {
    std::vector<RawTrajectory> trajectories;
    RawBatchCounters counters;
};

/// Proposes at most n distinct (case-folded) instructions for a document.
/// A completion with no parseable lines is retried once with a format
/// reminder; if that also fails the document is skipped with an empty
/// result and a skip record in the log.
std::vector<std::string> propose_instructions(const Document& doc, int n, Provider& provider,
                                              std::ostream* log = nullptr);

/// Runs one instruction against the environment for at most max_steps
/// actions. The recorded trajectory holds the executed commands and their
/// observations; a predicted stop ends the episode without being recorded
/// as a trajectory action. An unrecoverable REASON/ACTION parse error
/// aborts the episode, keeping the trajectory truncated at the last valid
/// observation.
EpisodeResult rollout(Env& env, const std::string& instruction, Provider& provider, int max_steps,
                      std::ostream* log = nullptr);

/// Backward construction: for every observation-bounded span of the parent
/// trajectory and every configured kind, asks the model for a new
/// instruction and emits one Example. Spans whose instruction generation
/// stays unparseable after one retry are skipped and logged.
std::vector<Example> backward_construct(const RawTrajectory& parent,
                                        const std::set<InstructionKind>& kinds, Provider& provider,
                                        std::ostream* log = nullptr, bool keep_original = false);

struct SynthesisOutput {
    RawBatch raw;
    std::vector<Example> examples;
};

/// Full synthesis pass over a document corpus: self-instruct, rollout,
/// backward construction. Per-document and per-instruction failures are
/// isolated (skip and log); an empty document list is an error.
SynthesisOutput synthesize_corpus(const std::vector<Document>& docs, const SynthesisConfig& config,
                                  const EnvFactory& env_factory, Provider& provider,
                                  std::ostream* log = nullptr, int jobs = 1);

}  // namespace traceforge
