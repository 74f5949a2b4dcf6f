#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "traceforge/core.hpp"
#include "traceforge/env.hpp"
#include "traceforge/gateway.hpp"
#include "traceforge/prompts.hpp"
#include "traceforge/retrieval.hpp"

namespace traceforge {

enum class AgentMode { ZeroShot, AgenticRetrieval };

std::string to_string(AgentMode mode);
AgentMode agent_mode_from_string(const std::string& s);

struct RuntimeConfig {
    int max_steps = 20;                  // m
    int m1 = 5;                          // observation-based retrieval cap
    int m2 = 5;                          // model-based retrieval cap
    int context_budget_tokens = 32000;
    AgentMode mode = AgentMode::AgenticRetrieval;
    std::string system_message = prompts::kDefaultSystemMessage;

    void validate() const;
};

/// One inference turn: what was observed, what was retrieved, and the
/// predicted reasoning and action.
struct TurnRecord {
    int step = 0;
    Observation observation;
    std::vector<RetrievalHit> retrieved;
    std::string reason;
    Action action;
};

json turn_to_json(const TurnRecord& turn);
void save_trace(const std::vector<TurnRecord>& turns, const std::string& path);

using ExampleStore = std::map<std::string, Example>;

ExampleStore make_example_store(const std::vector<Example>& examples);

/// Renders the action-prediction prompt, dropping the lowest-ranked whole
/// retrieved examples until the token estimate fits the budget. Examples
/// are never split. Throws BudgetError when even the zero-hit prompt
/// exceeds the budget.
std::string pack_context(const std::string& instruction, const prompts::History& history,
                         const std::string& observation, const std::vector<RetrievalHit>& hits,
                         const ExampleStore& store, int budget_tokens,
                         const std::string& system_message = prompts::kDefaultSystemMessage);

/// One observe-retrieve-predict-execute turn. Stop actions are recorded
/// but not sent to the environment. Parse failures that survive the single
/// reminder retry surface as ParseError (the episode abort path).
TurnRecord step(Env& env, const std::string& instruction, prompts::History& history,
                const RuntimeConfig& config, const RetrievalIndexes& indexes,
                const ExampleStore& store, Provider& provider, std::ostream* log = nullptr);

struct EpisodeOutput {
    EpisodeResult result;
    std::vector<TurnRecord> turns;
};

/// Runs turns until a stop is predicted, the environment finishes, or
/// max_steps turns have run. An abort mid-episode yields termination
/// Aborted with the partial turn trace preserved.
EpisodeOutput run_episode(Env& env, const std::string& instruction, const RuntimeConfig& config,
                          const RetrievalIndexes& indexes, const ExampleStore& store,
                          Provider& provider, std::ostream* log = nullptr);

}  // namespace traceforge
