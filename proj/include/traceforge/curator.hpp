#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "traceforge/core.hpp"
#include "traceforge/gateway.hpp"

namespace traceforge {

/// Quality-vote committee; the verdict is unanimous yes across members.
struct CommitteeConfig {
    std::vector<std::string> members;  // model ids, at least one
};

/// Removes adjacent duplicate (action, observation) pairs: pair k is
/// dropped when its action raw text and observation text both equal the
/// previously kept pair's. Idempotent; never lengthens a trajectory.
Trajectory dedup_states(const Trajectory& traj);

/// Renders the quality-check prompt per committee member and returns true
/// iff every member answers yes. A member whose answer stays unparseable
/// after one reminder retry counts as a no. Throws ConfigError for an
/// empty committee.
bool committee_check(const Example& example, const CommitteeConfig& committee, Provider& provider,
                     std::ostream* log = nullptr);

struct FilterReport {
    long input_examples = 0;
    long passed = 0;
    long rejected_committee = 0;
    long member_errors = 0;
    long duplicate_pairs_removed = 0;

    json to_json() const;
};

/// Cleans each trajectory with dedup_states (recomputing token counts),
/// then keeps the examples the committee unanimously accepts. Output is an
/// order-stable subsequence of the input.
std::vector<Example> filter_corpus(const std::vector<Example>& examples,
                                   const CommitteeConfig& committee, Provider& provider,
                                   FilterReport* report = nullptr, std::ostream* log = nullptr,
                                   int jobs = 1);

enum class Granularity { Short, Medium, Long };

std::string to_string(Granularity g);

/// Short: steps < 5; Medium: 5 <= steps < 10; Long: steps >= 10.
Granularity bucket_of(int steps);

std::map<Granularity, std::vector<Example>> bucket(const std::vector<Example>& examples);

/// Jaccard similarity of the token multisets of two texts.
double token_multiset_jaccard(const std::string& a, const std::string& b);

/// Instructions more similar than this to an already selected one are
/// skipped during subsampling.
inline constexpr double kSubsampleSimilarityCeiling = 0.9;

/// Budgeted diversity subsample. When the whole corpus fits the budget the
/// input is returned unchanged. Otherwise examples are visited in a seeded
/// shuffle order, near-duplicate instructions are skipped, and selection
/// stops when the next visited example would exceed the budget. The result
/// preserves input order.
std::vector<Example> subsample_to_budget(const std::vector<Example>& examples, long budget_tokens,
                                         uint64_t seed);

}  // namespace traceforge
