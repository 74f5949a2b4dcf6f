#include "traceforge/curator.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "traceforge/prompts.hpp"
#include "traceforge/util.hpp"

namespace traceforge {

Trajectory dedup_states(const Trajectory& traj) {
    const int n = action_count(traj);
    Trajectory out;
    out.observations.push_back(Observation{traj.observations[0].text, 0});
    for (int k = 0; k < n; ++k) {
        const auto& action = traj.actions[static_cast<size_t>(k)];
        const auto& obs = traj.observations[static_cast<size_t>(k) + 1];
        if (!out.actions.empty()) {
            const auto& kept_action = out.actions.back();
            const auto& kept_obs = out.observations.back();
            if (kept_action.raw == action.raw && kept_obs.text == obs.text) {
                continue;
            }
        }
        out.actions.push_back(action);
        out.observations.push_back(
            Observation{obs.text, static_cast<int>(out.actions.size())});
    }
    return out;
}

bool committee_check(const Example& example, const CommitteeConfig& committee, Provider& provider,
                     std::ostream* log) {
    if (committee.members.empty()) {
        throw ConfigError("committee must have at least one member");
    }
    const std::string prompt = prompts::render_filter(example.instruction, example.trajectory);
    for (const auto& member : committee.members) {
        CompletionRequest request;
        request.prompt = prompt;
        request.model_id = member;
        bool verdict = false;
        try {
            verdict = prompts::parse_yes_no(complete(request, provider));
        } catch (const ParseError&) {
            try {
                request.prompt = prompt + prompts::kReminderYesNo;
                verdict = prompts::parse_yes_no(complete(request, provider));
            } catch (const Error& e) {
                // Unreadable verdicts reject: filtering errs toward precision.
                log_event(log, "committee_member_error",
                          {{"example_id", example.id}, {"member", member}, {"error", e.what()}});
                return false;
            }
        }
        if (!verdict) return false;
    }
    return true;
}

json FilterReport::to_json() const {
    return {{"input_examples", input_examples},
            {"passed", passed},
            {"rejected_committee", rejected_committee},
            {"member_errors", member_errors},
            {"duplicate_pairs_removed", duplicate_pairs_removed}};
}

std::vector<Example> filter_corpus(const std::vector<Example>& examples,
                                   const CommitteeConfig& committee, Provider& provider,
                                   FilterReport* report, std::ostream* log, int jobs) {
    FilterReport local;
    local.input_examples = static_cast<long>(examples.size());

    struct Row {
        Example cleaned;
        bool keep = false;
        long removed_pairs = 0;
    };
    std::vector<Row> rows(examples.size());
    parallel_for(examples.size(), jobs, [&](size_t i) {
        Row& row = rows[i];
        row.cleaned = examples[i];
        row.cleaned.trajectory = dedup_states(examples[i].trajectory);
        row.removed_pairs = action_count(examples[i].trajectory) -
                            action_count(row.cleaned.trajectory);
        if (row.removed_pairs > 0) {
            row.cleaned.token_count =
                example_token_count(row.cleaned.instruction, row.cleaned.trajectory);
        }
        row.keep = committee_check(row.cleaned, committee, provider, log);
    });

    std::vector<Example> out;
    out.reserve(examples.size());
    for (auto& row : rows) {
        local.duplicate_pairs_removed += row.removed_pairs;
        if (row.keep) {
            out.push_back(std::move(row.cleaned));
            ++local.passed;
        } else {
            ++local.rejected_committee;
        }
    }
    if (report != nullptr) *report = local;
    return out;
}

std::string to_string(Granularity g) {
    switch (g) {
        case Granularity::Short: return "short";
        case Granularity::Medium: return "medium";
        case Granularity::Long: return "long";
    }
    return "short";
}

Granularity bucket_of(int steps) {
    if (steps < 5) return Granularity::Short;
    if (steps < 10) return Granularity::Medium;
    return Granularity::Long;
}

std::map<Granularity, std::vector<Example>> bucket(const std::vector<Example>& examples) {
    std::map<Granularity, std::vector<Example>> out;
    out[Granularity::Short];
    out[Granularity::Medium];
    out[Granularity::Long];
    for (const auto& example : examples) {
        out[bucket_of(action_count(example.trajectory))].push_back(example);
    }
    return out;
}

double token_multiset_jaccard(const std::string& a, const std::string& b) {
    std::map<std::string, int> ca, cb;
    for (auto& t : tokenize(a)) ++ca[t];
    for (auto& t : tokenize(b)) ++cb[t];
    long inter = 0, uni = 0;
    auto ia = ca.begin();
    auto ib = cb.begin();
    while (ia != ca.end() || ib != cb.end()) {
        if (ib == cb.end() || (ia != ca.end() && ia->first < ib->first)) {
            uni += ia->second;
            ++ia;
        } else if (ia == ca.end() || ib->first < ia->first) {
            uni += ib->second;
            ++ib;
        } else {
            inter += std::min(ia->second, ib->second);
            uni += std::max(ia->second, ib->second);
            ++ia;
            ++ib;
        }
    }
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<Example> subsample_to_budget(const std::vector<Example>& examples, long budget_tokens,
                                         uint64_t seed) {
    if (budget_tokens < 0) throw PreconditionError("budget must be non-negative");
    long total = 0;
    for (const auto& e : examples) total += e.token_count;
    if (total <= budget_tokens) return examples;

    std::vector<size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<bool> selected(examples.size(), false);
    std::vector<const std::string*> kept_instructions;
    long used = 0;
    for (size_t i : order) {
        const Example& candidate = examples[i];
        bool near_duplicate = false;
        for (const auto* kept : kept_instructions) {
            if (token_multiset_jaccard(*kept, candidate.instruction) > kSubsampleSimilarityCeiling) {
                near_duplicate = true;
                break;
            }
        }
        if (near_duplicate) continue;
        if (used + candidate.token_count > budget_tokens) break;
        selected[i] = true;
        kept_instructions.push_back(&candidate.instruction);
        used += candidate.token_count;
    }

    std::vector<Example> out;
    for (size_t i = 0; i < examples.size(); ++i) {
        if (selected[i]) out.push_back(examples[i]);
    }
    return out;
}

}  // namespace traceforge
