#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace traceforge {

using json = nlohmann::json;

// Error taxonomy shared by all modules. Everything derives from Error so
// callers can catch the whole family or a specific kind.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StructuralError : public Error { public: using Error::Error; };
class RangeError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class PreconditionError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class TransportError : public Error { public: using Error::Error; };
class LifecycleError : public Error { public: using Error::Error; };
class BudgetError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

/// A source text (tutorial, documentation page, FAQ) that seeds task
/// instructions.
struct Document {
    std::string id;
    std::string source_uri;
    std::string text;
    std::string domain_tag;

    bool operator==(const Document&) const = default;
};

/// Serialized environment state at one point in time. `step_index` is the
/// observation's ordinal within its trajectory (0 for the initial state).
struct Observation {
    std::string text;
    int step_index = 0;

    bool operator==(const Observation&) const = default;
};

enum class ActionKind { Command, Stop };

/// One agent action. The stop directive is any action whose trimmed text
/// begins with "stop" (case-insensitive); everything else is a command.
struct Action {
    std::string raw;
    ActionKind kind = ActionKind::Command;

    static Action from_raw(std::string raw);

    bool operator==(const Action&) const = default;
};

/// An alternating sequence o0, a1, o1, ..., an, on. Stored as parallel
/// vectors; well-formed means observations.size() == actions.size() + 1,
/// observation step indices equal their ordinals, and only the final
/// observation may have empty text (terminal sentinel).
struct Trajectory {
    std::vector<Observation> observations;
    std::vector<Action> actions;

    bool well_formed() const;

    bool operator==(const Trajectory&) const = default;
};

enum class InstructionKind { Original, Summary, Abstraction };

std::string to_string(InstructionKind kind);
InstructionKind instruction_kind_from_string(const std::string& s);

/// Where an Example came from: which document, which rollout, and which
/// observation-bounded span [span_start, span_end] of it.
struct Provenance {
    std::string doc_id;
    std::string parent_trajectory_id;
    int span_start = 0;
    int span_end = 0;
    InstructionKind kind = InstructionKind::Abstraction;

    bool operator==(const Provenance&) const = default;
};

/// An instruction paired with the trajectory that accomplishes it.
/// `extra` holds unknown JSON fields so records round-trip losslessly.
struct Example {
    std::string id;
    std::string instruction;
    Trajectory trajectory;
    Provenance provenance;
    int token_count = 0;
    json extra = json::object();

    bool operator==(const Example&) const = default;
};

enum class HitSource { ObservationBased, ModelBased };

std::string to_string(HitSource source);
HitSource hit_source_from_string(const std::string& s);

/// A reference to a stored Example produced by one retrieval channel.
struct RetrievalHit {
    std::string example_id;
    double score = 0.0;
    HitSource source = HitSource::ObservationBased;

    bool operator==(const RetrievalHit&) const = default;
};

enum class Termination { StopPredicted, MaxSteps, EnvFinished, Aborted };

std::string to_string(Termination t);
Termination termination_from_string(const std::string& s);

/// Outcome of one rollout: the recorded trajectory, why it ended, and how
/// many actions it contains.
struct EpisodeResult {
    Trajectory trajectory;
    Termination termination = Termination::StopPredicted;
    int steps = 0;

    bool operator==(const EpisodeResult&) const = default;
};

/// Number of actions n in a trajectory. Throws StructuralError if the
/// trajectory is malformed.
int action_count(const Trajectory& traj);

/// The observation-bounded slice (o_i, a_{i+1}, ..., a_j, o_j), both ends
/// inclusive, with observation step indices renumbered from 0.
/// Requires 0 <= i < j <= action_count(traj); throws RangeError otherwise.
Trajectory sub_trajectory(const Trajectory& traj, int i, int j);

/// All span pairs 0 <= i < j <= n in (i ascending, j ascending) order.
/// The count is n(n+1)/2.
std::vector<std::pair<int, int>> enumerate_spans(int n);

/// Deterministic token estimate: the number of maximal runs of
/// non-whitespace characters, where whitespace is any Unicode whitespace
/// code point. est("") == 0 and est(a+b) >= max(est(a), est(b)).
int estimate_tokens(std::string_view text);

/// Tokens of `text` under the same splitting rule, ASCII-lowercased.
/// This is the shared tokenization for indexing and similarity checks.
std::vector<std::string> tokenize(std::string_view text);

/// Canonical text form of a trajectory: "Observation:"/"Action:" blocks in
/// order. Used for prompt rendering and for token accounting.
std::string trajectory_text(const Trajectory& traj);

/// Token estimate of an example's instruction plus its serialized
/// trajectory; this is the value Example.token_count must carry.
int example_token_count(const std::string& instruction, const Trajectory& traj);

/// Appends (observation, action) pairs and a final observation while
/// keeping step indices consistent. Used by rollouts and test generators.
class TrajectoryBuilder {
public:
    TrajectoryBuilder& start(std::string observation_text);
    TrajectoryBuilder& step(std::string action_raw, std::string observation_text);
    Trajectory build() const;

private:
    Trajectory traj_;
    bool started_ = false;
};

}  // namespace traceforge
