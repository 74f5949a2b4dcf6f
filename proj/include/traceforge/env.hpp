#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "traceforge/core.hpp"

namespace traceforge {

/// Environment interface: reset, observe, execute, finished. One handle is
/// exclusively owned by one rollout at a time; distinct handles may run
/// concurrently.
class Env {
public:
    virtual ~Env() = default;

    /// Returns the environment to its initial state and yields o0.
    virtual Observation reset() = 0;

    /// Pure read of the current state. Two calls without an intervening
    /// execute return identical text.
    virtual Observation get_observation() const = 0;

    /// Executes a command action and returns the resulting observation.
    /// Invalid actions (unknown widget, unparseable command) are silent
    /// no-ops: the state is unchanged and the returned text equals the
    /// previous observation text. Throws PreconditionError for Stop
    /// actions and LifecycleError when the environment is finished.
    virtual Observation execute(const Action& action) = 0;

    /// True once a terminal state is reached or a stop was recorded.
    /// Monotone between resets.
    virtual bool finished() const = 0;

    /// Marks the episode as stopped by the agent runtime; finished() will
    /// return true until the next reset.
    virtual void record_stop() = 0;

    virtual int step_counter() const = 0;
    virtual const std::string& env_id() const = 0;
};

using EnvFactory = std::function<std::unique_ptr<Env>()>;

struct WidgetSpec {
    std::string widget_id;
    std::string kind;
    std::string label;

    bool operator==(const WidgetSpec&) const = default;
};

struct PageSpec {
    std::string title;
    std::vector<WidgetSpec> widgets;

    bool operator==(const PageSpec&) const = default;
};

/// Declarative description of a simulated world: pages with widgets, a
/// deterministic (page, widget) -> page transition table, and task goals.
/// Pages with no outgoing transitions are terminal.
struct SimWorldSpec {
    struct TaskGoal {
        std::string goal_id;
        std::string predicate;

        bool operator==(const TaskGoal&) const = default;
    };

    std::map<std::string, PageSpec> pages;
    std::map<std::pair<std::string, std::string>, std::string> transitions;
    std::vector<TaskGoal> task_goals;
    std::string start_page;
    uint64_t seed = 0;

    /// Throws ConfigError when a transition references an unknown page or
    /// widget, or when start_page is missing.
    void validate() const;

    bool has_outgoing(const std::string& page_id) const;

    static SimWorldSpec from_json(const json& j);
    json to_json() const;
};

/// Loads and validates a SimWorldSpec from a JSON file.
SimWorldSpec load_world(const std::string& path);

/// Accessibility-tree-style rendering of a page: one "[id] kind 'label'"
/// line per node, widgets indented under the page line.
std::string render_page_observation(const SimWorldSpec& spec, const std::string& page_id);

/// Extracts the widget id from a "click [id]" command; trailing comments
/// after the bracket group are ignored. Returns nullopt for anything else.
std::optional<std::string> parse_click_target(const std::string& raw);

/// Deterministic simulated environment over a SimWorldSpec.
class SimEnv : public Env {
public:
    explicit SimEnv(SimWorldSpec spec, std::string env_id = "sim");

    Observation reset() override;
    Observation get_observation() const override;
    Observation execute(const Action& action) override;
    bool finished() const override;
    void record_stop() override;
    int step_counter() const override;
    const std::string& env_id() const override;

    const std::string& current_page() const { return current_page_; }

private:
    SimWorldSpec spec_;
    std::string id_;
    std::string current_page_;
    int steps_ = 0;
    bool stop_recorded_ = false;
};

}  // namespace traceforge
