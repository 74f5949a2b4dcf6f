#include "traceforge/synthesizer.hpp"

#include <algorithm>
#include <cctype>

#include "traceforge/prompts.hpp"
#include "traceforge/util.hpp"

namespace traceforge {

namespace {

std::string case_fold(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

prompts::History history_from(const Trajectory& traj) {
    prompts::History history;
    for (size_t k = 0; k < traj.actions.size(); ++k) {
        history.emplace_back(traj.observations[k].text, traj.actions[k].raw);
    }
    return history;
}

// Generates the instruction for one span/kind, retrying once with a fence
// reminder.
std::string span_instruction(const Trajectory& sub, InstructionKind kind, Provider& provider) {
    std::string prompt = kind == InstructionKind::Summary ? prompts::render_summarize(sub)
                                                          : prompts::render_new_task(sub);
    CompletionRequest request;
    request.prompt = prompt;
    try {
        return prompts::parse_fenced(complete(request, provider));
    } catch (const ParseError&) {
        request.prompt = prompt + prompts::kReminderFenced;
        return prompts::parse_fenced(complete(request, provider));
    }
}

const char* kind_tag(InstructionKind kind) {
    switch (kind) {
        case InstructionKind::Original: return "orig";
        case InstructionKind::Summary: return "sum";
        case InstructionKind::Abstraction: return "abs";
    }
    return "abs";
}

}  // namespace

void SynthesisConfig::validate() const {
    if (instructions_per_doc < 1) throw ConfigError("instructions_per_doc must be >= 1");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (kinds.empty()) throw ConfigError("at least one instruction kind is required");
}

std::vector<std::string> propose_instructions(const Document& doc, int n, Provider& provider,
                                              std::ostream* log) {
    std::string prompt = prompts::render_self_instruct(doc, n);
    CompletionRequest request;
    request.prompt = prompt;
    std::vector<std::string> lines;
    try {
        lines = prompts::parse_starred_list(complete(request, provider), n);
    } catch (const ParseError&) {
        try {
            request.prompt = prompt + prompts::kReminderStarred;
            lines = prompts::parse_starred_list(complete(request, provider), n);
        } catch (const Error& e) {
            log_event(log, "doc_skipped", {{"doc_id", doc.id}, {"error", e.what()}});
            return {};
        }
    }
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& line : lines) {
        if (seen.insert(case_fold(line)).second) out.push_back(std::move(line));
    }
    return out;
}

EpisodeResult rollout(Env& env, const std::string& instruction, Provider& provider, int max_steps,
                      std::ostream* log) {
    env.reset();
    Trajectory traj;
    Termination termination = Termination::MaxSteps;
    for (;;) {
        if (env.finished()) {
            termination = Termination::EnvFinished;
            break;
        }
        if (static_cast<int>(traj.actions.size()) >= max_steps) {
            termination = Termination::MaxSteps;
            break;
        }
        Observation obs = env.get_observation();
        std::string prompt =
            prompts::render_act(instruction, history_from(traj), obs.text);
        CompletionRequest request;
        request.prompt = prompt;
        prompts::ReasonAction turn;
        try {
            turn = prompts::parse_reason_action(complete(request, provider));
        } catch (const ParseError&) {
            try {
                request.prompt = prompt + prompts::kReminderReasonAction;
                turn = prompts::parse_reason_action(complete(request, provider));
            } catch (const Error& e) {
                log_event(log, "rollout_aborted",
                          {{"step", static_cast<int>(traj.actions.size())}, {"error", e.what()}});
                termination = Termination::Aborted;
                break;
            }
        }
        if (turn.action.kind == ActionKind::Stop) {
            env.record_stop();
            termination = Termination::StopPredicted;
            break;
        }
        traj.observations.push_back(
            Observation{obs.text, static_cast<int>(traj.actions.size())});
        traj.actions.push_back(turn.action);
        env.execute(turn.action);
    }
    traj.observations.push_back(
        Observation{env.get_observation().text, static_cast<int>(traj.actions.size())});
    EpisodeResult result;
    result.steps = action_count(traj);
    result.trajectory = std::move(traj);
    result.termination = termination;
    return result;
}

std::vector<Example> backward_construct(const RawTrajectory& parent,
                                        const std::set<InstructionKind>& kinds, Provider& provider,
                                        std::ostream* log, bool keep_original) {
    const int n = action_count(parent.trajectory);
    if (n < 1) throw PreconditionError("backward construction needs a trajectory with actions");

    std::vector<Example> out;
    for (const auto& [i, j] : enumerate_spans(n)) {
        Trajectory sub = sub_trajectory(parent.trajectory, i, j);
        for (InstructionKind kind : kinds) {
            if (kind == InstructionKind::Original) continue;
            std::string instruction;
            try {
                instruction = span_instruction(sub, kind, provider);
            } catch (const Error& e) {
                log_event(log, "span_skipped",
                          {{"parent", parent.id}, {"span", {i, j}},
                           {"kind", to_string(kind)}, {"error", e.what()}});
                continue;
            }
            Example example;
            example.id = parent.id + "/s" + std::to_string(i) + "-" + std::to_string(j) + "/" +
                         kind_tag(kind);
            example.instruction = std::move(instruction);
            example.trajectory = sub;
            example.provenance = Provenance{parent.doc_id, parent.id, i, j, kind};
            example.token_count = example_token_count(example.instruction, example.trajectory);
            out.push_back(std::move(example));
        }
    }
    if (keep_original) {
        Example example;
        example.id = parent.id + "/s0-" + std::to_string(n) + "/orig";
        example.instruction = parent.instruction;
        example.trajectory = parent.trajectory;
        example.provenance =
            Provenance{parent.doc_id, parent.id, 0, n, InstructionKind::Original};
        example.token_count = example_token_count(example.instruction, example.trajectory);
        out.push_back(std::move(example));
    }
    return out;
}

SynthesisOutput synthesize_corpus(const std::vector<Document>& docs, const SynthesisConfig& config,
                                  const EnvFactory& env_factory, Provider& provider,
                                  std::ostream* log, int jobs) {
    config.validate();
    if (docs.empty()) throw PreconditionError("synthesis needs at least one document");

    struct Task {
        size_t doc_index;
        std::string instruction;
        std::string parent_id;
    };
    std::vector<Task> tasks;
    RawBatch raw;
    for (size_t d = 0; d < docs.size(); ++d) {
        raw.counters.docs_seen += 1;
        auto instructions =
            propose_instructions(docs[d], config.instructions_per_doc, provider, log);
        raw.counters.instructions_proposed += static_cast<long>(instructions.size());
        for (size_t k = 0; k < instructions.size(); ++k) {
            tasks.push_back(Task{d, instructions[k], docs[d].id + "/t" + std::to_string(k)});
        }
        log_event(log, "doc_done",
                  {{"doc_id", docs[d].id}, {"instructions", instructions.size()}});
    }

    struct TaskResult {
        RawTrajectory parent;
        std::vector<Example> examples;
        bool ok = false;
    };
    std::vector<TaskResult> results(tasks.size());
    parallel_for(tasks.size(), jobs, [&](size_t t) {
        const Task& task = tasks[t];
        TaskResult& result = results[t];
        try {
            auto env = env_factory();
            EpisodeResult episode = rollout(*env, task.instruction, provider, config.max_steps, log);
            result.parent = RawTrajectory{task.parent_id, docs[task.doc_index].id, task.instruction,
                                          episode.termination, std::move(episode.trajectory)};
            if (action_count(result.parent.trajectory) >= 1) {
                result.examples = backward_construct(result.parent, config.kinds, provider, log,
                                                     config.keep_original);
            }
            result.ok = true;
        } catch (const Error& e) {
            log_event(log, "instruction_skipped",
                      {{"parent", task.parent_id}, {"error", e.what()}});
        }
    });

    SynthesisOutput out;
    out.raw.counters = raw.counters;
    for (auto& result : results) {
        if (!result.ok) continue;
        out.raw.counters.rollouts_completed += 1;
        out.raw.trajectories.push_back(std::move(result.parent));
        for (auto& example : result.examples) {
            out.examples.push_back(std::move(example));
        }
        log_event(log, "rollout_done",
                  {{"parent", out.raw.trajectories.back().id},
                   {"steps", action_count(out.raw.trajectories.back().trajectory)}});
    }
    return out;
}

}  // namespace traceforge
