#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "traceforge/core.hpp"

namespace traceforge::prompts {

/// Past (observation text, action text) pairs, oldest first.
using History = std::vector<std::pair<std::string, std::string>>;

inline constexpr char kDefaultSystemMessage[] =
    "You are an agent interacting with a text-serialized environment. Each page lists its "
    "nodes as [id] kind 'label' lines. Issue exactly one action per turn, e.g. click [node_id], "
    "or reply stop: <answer> when the objective is complete.";

/// Substitutes {name} placeholders from `vars`. Throws ConfigError when the
/// template references a name that is not provided.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// "Observation:"/"Action:" blocks for a history, oldest first; empty
/// history renders as an empty string.
std::string history_blocks(const History& history);

/// Task-proposal prompt over a document. `n` controls how many starred
/// lines are requested; optional exemplars are included as reference tasks.
std::string render_self_instruct(const Document& doc, int n,
                                 const std::vector<std::string>& exemplars = {});

/// Lines beginning with "*", trimmed, at most n. Throws ParseError when no
/// line parses.
std::vector<std::string> parse_starred_list(const std::string& text, int n);

/// Instruction-abstraction prompt for a (sub-)trajectory.
std::string render_new_task(const Trajectory& traj);

/// Step-summary prompt for a (sub-)trajectory.
std::string render_summarize(const Trajectory& traj);

/// Quality-check prompt for an instruction/trajectory pair; expects a
/// yes/no answer.
std::string render_filter(const std::string& instruction, const Trajectory& traj);

struct ActPromptOptions {
    std::string system_message = kDefaultSystemMessage;
    /// When set, oldest history turns are dropped until the history block's
    /// token estimate fits this budget.
    std::optional<int> history_budget_tokens;
};

/// Action-prediction prompt. With retrieved example blocks the prompt
/// gains an ADDITIONAL INFORMATION FOR REFERENCE section ahead of the
/// objective; without them it is the plain zero-shot shape.
std::string render_act(const std::string& instruction, const History& history,
                       const std::string& observation,
                       const std::vector<std::string>& retrieved_blocks = {},
                       const ActPromptOptions& options = {});

/// Retrieval-query prompt over instruction, history and observation.
std::string render_query(const std::string& instruction, const History& history,
                         const std::string& observation,
                         const std::string& system_message = kDefaultSystemMessage);

/// One stored example rendered as reference material for render_act.
std::string render_example_block(const Example& example);

struct ReasonAction {
    std::string reason;
    Action action;
};

/// Splits a completion on its last "ACTION:" marker. Throws ParseError
/// when the marker is missing or the action text is empty.
ReasonAction parse_reason_action(const std::string& text);

/// The expected-output shape: REASON/ACTION blocks. Inverse of
/// parse_reason_action for marker-free reason/action texts.
std::string format_reason_action(const std::string& reason, const std::string& action_raw);

/// Payload between the first pair of ``` fences, trimmed. Throws
/// ParseError when no fenced payload exists.
std::string parse_fenced(const std::string& text);

/// Maps leading yes/no words to a verdict; anything else is a ParseError.
bool parse_yes_no(const std::string& text);

// Reminders appended to a prompt on the single retry after a parse error.
inline constexpr char kReminderStarred[] =
    "\n\nRemember: output each task on its own line starting with '* '.";
inline constexpr char kReminderFenced[] =
    "\n\nRemember: wrap your answer with ``` fences.";
inline constexpr char kReminderYesNo[] =
    "\n\nAnswer with a single word: yes or no.";
inline constexpr char kReminderReasonAction[] =
    "\n\nRespond in exactly the format:\nREASON:\n<your reasoning>\nACTION:\n<your action>";

}  // namespace traceforge::prompts
