#include "traceforge/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "traceforge/prompt_assets.hpp"

namespace traceforge::prompts {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    size_t i = 0;
    while (i < tmpl.size()) {
        char c = tmpl[i];
        if (c == '{') {
            size_t close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                std::string name(tmpl.substr(i + 1, close - i - 1));
                auto it = vars.find(name);
                if (it == vars.end()) {
                    throw ConfigError("template placeholder '{" + name + "}' has no value");
                }
                out += it->second;
                i = close + 1;
                continue;
            }
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

std::string history_blocks(const History& history) {
    std::string out;
    for (size_t k = 0; k < history.size(); ++k) {
        if (k > 0) out += "\n";
        out += "Observation:\n" + history[k].first + "\nAction:\n" + history[k].second;
    }
    return out;
}

std::string render_self_instruct(const Document& doc, int n,
                                 const std::vector<std::string>& exemplars) {
    if (n < 1) throw PreconditionError("self-instruct needs n >= 1");
    std::string n_tasks = std::to_string(n) + (n == 1 ? " task" : " tasks");
    std::string exemplar_block;
    if (!exemplars.empty()) {
        exemplar_block = "Here are example tasks for reference:\n";
        for (const auto& e : exemplars) exemplar_block += "* " + e + "\n";
        exemplar_block += "\n";
    }
    return render_template(kTplSelfInstruct, {{"documentation", doc.text},
                                              {"exemplar_block", exemplar_block},
                                              {"n_tasks", n_tasks}});
}

std::vector<std::string> parse_starred_list(const std::string& text, int n) {
    std::vector<std::string> items;
    size_t pos = 0;
    while (pos <= text.size() && static_cast<int>(items.size()) < n) {
        size_t eol = text.find('\n', pos);
        std::string line = trim(text.substr(pos, eol == std::string::npos ? eol : eol - pos));
        if (!line.empty() && line[0] == '*') {
            std::string item = trim(line.substr(1));
            if (!item.empty()) items.push_back(std::move(item));
        }
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }
    if (items.empty()) throw ParseError("no starred lines in completion");
    return items;
}

std::string render_new_task(const Trajectory& traj) {
    return render_template(kTplNewTask, {{"trajectory", trajectory_text(traj)}});
}

std::string render_summarize(const Trajectory& traj) {
    return render_template(kTplSummarize, {{"trajectory", trajectory_text(traj)}});
}

std::string render_filter(const std::string& instruction, const Trajectory& traj) {
    return render_template(kTplFilterCheck, {{"instruction", instruction},
                                             {"trajectory", trajectory_text(traj)}});
}

std::string render_act(const std::string& instruction, const History& history,
                       const std::string& observation,
                       const std::vector<std::string>& retrieved_blocks,
                       const ActPromptOptions& options) {
    History kept = history;
    if (options.history_budget_tokens) {
        while (!kept.empty() && estimate_tokens(history_blocks(kept)) > *options.history_budget_tokens) {
            kept.erase(kept.begin());
        }
    }
    std::map<std::string, std::string> vars = {
        {"system_message", options.system_message},
        {"task_instruction", instruction},
        {"interaction_history", history_blocks(kept)},
        {"observations", observation},
    };
    if (retrieved_blocks.empty()) {
        return render_template(kTplAct, vars);
    }
    std::string knowledge;
    for (size_t k = 0; k < retrieved_blocks.size(); ++k) {
        if (k > 0) knowledge += "\n\n";
        knowledge += retrieved_blocks[k];
    }
    vars["external_knowledge"] = knowledge;
    return render_template(kTplActWithKnowledge, vars);
}

std::string render_query(const std::string& instruction, const History& history,
                         const std::string& observation, const std::string& system_message) {
    return render_template(kTplWriteQuery, {{"system_message", system_message},
                                            {"task_instruction", instruction},
                                            {"interaction_history", history_blocks(history)},
                                            {"observations", observation}});
}

std::string render_example_block(const Example& example) {
    return "Task instruction:\n" + example.instruction + "\n" + trajectory_text(example.trajectory);
}

ReasonAction parse_reason_action(const std::string& text) {
    static const std::string kActionMarker = "ACTION:";
    static const std::string kReasonMarker = "REASON:";
    size_t action_pos = text.rfind(kActionMarker);
    if (action_pos == std::string::npos) {
        throw ParseError("completion has no ACTION: marker");
    }
    std::string action_text = trim(text.substr(action_pos + kActionMarker.size()));
    if (action_text.empty()) {
        throw ParseError("completion has an empty action");
    }
    std::string head = text.substr(0, action_pos);
    size_t reason_pos = head.find(kReasonMarker);
    std::string reason = reason_pos == std::string::npos
                             ? trim(head)
                             : trim(head.substr(reason_pos + kReasonMarker.size()));
    return ReasonAction{std::move(reason), Action::from_raw(std::move(action_text))};
}

std::string format_reason_action(const std::string& reason, const std::string& action_raw) {
    return "REASON:\n" + reason + "\nACTION:\n" + action_raw;
}

std::string parse_fenced(const std::string& text) {
    static const std::string kFence = "```";
    size_t open = text.find(kFence);
    if (open == std::string::npos) throw ParseError("completion has no ``` fence");
    size_t close = text.find(kFence, open + kFence.size());
    if (close == std::string::npos) throw ParseError("completion has an unclosed ``` fence");
    std::string payload = trim(text.substr(open + kFence.size(), close - open - kFence.size()));
    if (payload.empty()) throw ParseError("fenced payload is empty");
    return payload;
}

bool parse_yes_no(const std::string& text) {
    std::string word = lower(trim(text));
    size_t end = 0;
    while (end < word.size() && std::isalpha(static_cast<unsigned char>(word[end]))) ++end;
    word = word.substr(0, end);
    if (word == "yes") return true;
    if (word == "no") return false;
    throw ParseError("completion is neither yes nor no");
}

}  // namespace traceforge::prompts
