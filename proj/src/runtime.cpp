#include "traceforge/runtime.hpp"

#include <fstream>

#include "traceforge/util.hpp"

namespace traceforge {

std::string to_string(AgentMode mode) {
    return mode == AgentMode::ZeroShot ? "zero_shot" : "agentic_retrieval";
}

AgentMode agent_mode_from_string(const std::string& s) {
    if (s == "zero_shot") return AgentMode::ZeroShot;
    if (s == "agentic_retrieval") return AgentMode::AgenticRetrieval;
    throw ConfigError("unknown agent mode: " + s);
}

void RuntimeConfig::validate() const {
    if (max_steps < 1) throw ConfigError("runtime max_steps must be >= 1");
    if (m1 < 0 || m2 < 0) throw ConfigError("retrieval caps must be >= 0");
    if (context_budget_tokens <= 0) throw ConfigError("context budget must be positive");
}

json turn_to_json(const TurnRecord& turn) {
    json retrieved = json::array();
    for (const auto& hit : turn.retrieved) {
        retrieved.push_back({{"example_id", hit.example_id},
                             {"score", hit.score},
                             {"source", to_string(hit.source)}});
    }
    return {{"step", turn.step},
            {"observation", {{"text", turn.observation.text}, {"step_index", turn.observation.step_index}}},
            {"retrieved", retrieved},
            {"reason", turn.reason},
            {"action", {{"raw", turn.action.raw},
                        {"kind", turn.action.kind == ActionKind::Stop ? "stop" : "command"}}}};
}

void save_trace(const std::vector<TurnRecord>& turns, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write trace: " + path);
    for (const auto& turn : turns) {
        out << turn_to_json(turn).dump() << "\n";
    }
}

ExampleStore make_example_store(const std::vector<Example>& examples) {
    ExampleStore store;
    for (const auto& example : examples) store[example.id] = example;
    return store;
}

std::string pack_context(const std::string& instruction, const prompts::History& history,
                         const std::string& observation, const std::vector<RetrievalHit>& hits,
                         const ExampleStore& store, int budget_tokens,
                         const std::string& system_message) {
    if (budget_tokens <= 0) throw PreconditionError("context budget must be positive");

    std::vector<std::string> blocks;
    blocks.reserve(hits.size());
    for (const auto& hit : hits) {
        auto it = store.find(hit.example_id);
        if (it == store.end()) continue;
        blocks.push_back(prompts::render_example_block(it->second));
    }

    prompts::ActPromptOptions options;
    options.system_message = system_message;
    options.history_budget_tokens = budget_tokens;
    for (size_t keep = blocks.size();; --keep) {
        std::vector<std::string> kept(blocks.begin(), blocks.begin() + static_cast<long>(keep));
        std::string prompt = prompts::render_act(instruction, history, observation, kept, options);
        if (estimate_tokens(prompt) <= budget_tokens) return prompt;
        if (keep == 0) break;
    }
    throw BudgetError("prompt exceeds the context budget even with no retrieved examples");
}

TurnRecord step(Env& env, const std::string& instruction, prompts::History& history,
                const RuntimeConfig& config, const RetrievalIndexes& indexes,
                const ExampleStore& store, Provider& provider, std::ostream* log) {
    if (env.finished()) throw LifecycleError("step on a finished environment");

    TurnRecord turn;
    turn.step = static_cast<int>(history.size());
    turn.observation = env.get_observation();

    if (config.mode == AgentMode::AgenticRetrieval) {
        turn.retrieved = agentic_retrieve(instruction, history, turn.observation.text, config.m1,
                                          config.m2, indexes, provider, log);
    }

    std::string prompt = pack_context(instruction, history, turn.observation.text, turn.retrieved,
                                      store, config.context_budget_tokens, config.system_message);
    CompletionRequest request;
    request.prompt = prompt;
    prompts::ReasonAction predicted;
    try {
        predicted = prompts::parse_reason_action(complete(request, provider));
    } catch (const ParseError&) {
        request.prompt = prompt + prompts::kReminderReasonAction;
        predicted = prompts::parse_reason_action(complete(request, provider));
    }
    turn.reason = std::move(predicted.reason);
    turn.action = std::move(predicted.action);

    if (turn.action.kind == ActionKind::Command) {
        env.execute(turn.action);
    } else {
        env.record_stop();
    }
    history.emplace_back(turn.observation.text, turn.action.raw);
    return turn;
}

EpisodeOutput run_episode(Env& env, const std::string& instruction, const RuntimeConfig& config,
                          const RetrievalIndexes& indexes, const ExampleStore& store,
                          Provider& provider, std::ostream* log) {
    config.validate();
    env.reset();

    EpisodeOutput out;
    prompts::History history;
    Termination termination = Termination::MaxSteps;
    for (;;) {
        if (env.finished()) {
            termination = Termination::EnvFinished;
            break;
        }
        if (static_cast<int>(out.turns.size()) >= config.max_steps) {
            termination = Termination::MaxSteps;
            break;
        }
        TurnRecord turn;
        try {
            turn = step(env, instruction, history, config, indexes, store, provider, log);
        } catch (const ParseError& e) {
            log_event(log, "episode_aborted",
                      {{"turn", out.turns.size()}, {"error", e.what()}});
            termination = Termination::Aborted;
            break;
        }
        out.turns.push_back(std::move(turn));
        if (out.turns.back().action.kind == ActionKind::Stop) {
            termination = Termination::StopPredicted;
            break;
        }
    }

    Trajectory traj;
    for (const auto& turn : out.turns) {
        if (turn.action.kind != ActionKind::Command) continue;
        traj.observations.push_back(
            Observation{turn.observation.text, static_cast<int>(traj.actions.size())});
        traj.actions.push_back(turn.action);
    }
    traj.observations.push_back(
        Observation{env.get_observation().text, static_cast<int>(traj.actions.size())});

    out.result.steps = action_count(traj);
    out.result.trajectory = std::move(traj);
    out.result.termination = termination;
    return out;
}

}  // namespace traceforge
