#include "traceforge/core.hpp"

#include <algorithm>
#include <cctype>

namespace traceforge {

namespace {

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
        case 0x0085: case 0x00A0: case 0x1680:
        case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
        case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
        case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
        case 0x3000:
            return true;
        default:
            return false;
    }
}

// Decodes one UTF-8 code point starting at `i`, advancing `i` past it.
// Malformed bytes are consumed one at a time and reported as U+FFFD so the
// scan always terminates.
char32_t next_code_point(std::string_view s, size_t& i) {
    auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) { i += 1; return b0; }
    size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { i += 1; return 0xFFFD; }
    if (i + len > s.size()) { i += 1; return 0xFFFD; }
    for (size_t k = 1; k < len; ++k) {
        unsigned char bk = byte(i + k);
        if ((bk & 0xC0) != 0x80) { i += 1; return 0xFFFD; }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += len;
    return cp;
}

std::string trimmed(std::string_view s) {
    size_t begin = 0;
    size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

}  // namespace

Action Action::from_raw(std::string raw) {
    std::string head = trimmed(raw);
    std::transform(head.begin(), head.end(), head.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    ActionKind kind = head.rfind("stop", 0) == 0 ? ActionKind::Stop : ActionKind::Command;
    return Action{std::move(raw), kind};
}

bool Trajectory::well_formed() const {
    if (observations.size() != actions.size() + 1) return false;
    for (size_t k = 0; k < observations.size(); ++k) {
        if (observations[k].step_index != static_cast<int>(k)) return false;
        if (observations[k].text.empty() && k + 1 != observations.size()) return false;
    }
    return true;
}

int action_count(const Trajectory& traj) {
    if (!traj.well_formed()) {
        throw StructuralError("malformed trajectory: expected alternating o0, a1, o1, ..., an, on");
    }
    return static_cast<int>(traj.actions.size());
}

Trajectory sub_trajectory(const Trajectory& traj, int i, int j) {
    const int n = action_count(traj);
    if (i < 0 || i >= j || j > n) {
        throw RangeError("sub_trajectory span (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") outside 0 <= i < j <= " + std::to_string(n));
    }
    Trajectory out;
    out.observations.reserve(static_cast<size_t>(j - i) + 1);
    out.actions.reserve(static_cast<size_t>(j - i));
    for (int k = i; k <= j; ++k) {
        Observation o = traj.observations[static_cast<size_t>(k)];
        o.step_index = k - i;
        out.observations.push_back(std::move(o));
    }
    for (int k = i; k < j; ++k) {
        out.actions.push_back(traj.actions[static_cast<size_t>(k)]);
    }
    return out;
}

std::vector<std::pair<int, int>> enumerate_spans(int n) {
    std::vector<std::pair<int, int>> spans;
    if (n <= 0) return spans;
    spans.reserve(static_cast<size_t>(n) * (static_cast<size_t>(n) + 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j <= n; ++j) {
            spans.emplace_back(i, j);
        }
    }
    return spans;
}

int estimate_tokens(std::string_view text) {
    int count = 0;
    bool in_token = false;
    size_t i = 0;
    while (i < text.size()) {
        char32_t cp = next_code_point(text, i);
        if (is_unicode_space(cp)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    size_t i = 0;
    while (i < text.size()) {
        size_t start = i;
        char32_t cp = next_code_point(text, i);
        if (is_unicode_space(cp)) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        } else {
            for (size_t k = start; k < i; ++k) {
                char c = text[k];
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
                current.push_back(c);
            }
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string trajectory_text(const Trajectory& traj) {
    std::string out;
    const size_t n = traj.actions.size();
    for (size_t k = 0; k < traj.observations.size(); ++k) {
        if (k > 0) out += "\n";
        out += "Observation:\n";
        out += traj.observations[k].text;
        if (k < n) {
            out += "\nAction:\n";
            out += traj.actions[k].raw;
        }
    }
    return out;
}

int example_token_count(const std::string& instruction, const Trajectory& traj) {
    return estimate_tokens(instruction) + estimate_tokens(trajectory_text(traj));
}

std::string to_string(InstructionKind kind) {
    switch (kind) {
        case InstructionKind::Original: return "original";
        case InstructionKind::Summary: return "summary";
        case InstructionKind::Abstraction: return "abstraction";
    }
    return "abstraction";
}

InstructionKind instruction_kind_from_string(const std::string& s) {
    if (s == "original") return InstructionKind::Original;
    if (s == "summary") return InstructionKind::Summary;
    if (s == "abstraction") return InstructionKind::Abstraction;
    throw ParseError("unknown instruction kind: " + s);
}

std::string to_string(HitSource source) {
    return source == HitSource::ObservationBased ? "observation_based" : "model_based";
}

HitSource hit_source_from_string(const std::string& s) {
    if (s == "observation_based") return HitSource::ObservationBased;
    if (s == "model_based") return HitSource::ModelBased;
    throw ParseError("unknown hit source: " + s);
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::StopPredicted: return "stop_predicted";
        case Termination::MaxSteps: return "max_steps";
        case Termination::EnvFinished: return "env_finished";
        case Termination::Aborted: return "aborted";
    }
    return "aborted";
}

Termination termination_from_string(const std::string& s) {
    if (s == "stop_predicted") return Termination::StopPredicted;
    if (s == "max_steps") return Termination::MaxSteps;
    if (s == "env_finished") return Termination::EnvFinished;
    if (s == "aborted") return Termination::Aborted;
    throw ParseError("unknown termination: " + s);
}

TrajectoryBuilder& TrajectoryBuilder::start(std::string observation_text) {
    traj_ = Trajectory{};
    traj_.observations.push_back(Observation{std::move(observation_text), 0});
    started_ = true;
    return *this;
}

TrajectoryBuilder& TrajectoryBuilder::step(std::string action_raw, std::string observation_text) {
    if (!started_) throw StructuralError("TrajectoryBuilder::step before start");
    traj_.actions.push_back(Action::from_raw(std::move(action_raw)));
    traj_.observations.push_back(
        Observation{std::move(observation_text), static_cast<int>(traj_.actions.size())});
    return *this;
}

Trajectory TrajectoryBuilder::build() const {
    if (!started_) throw StructuralError("TrajectoryBuilder::build before start");
    return traj_;
}

}  // namespace traceforge
