#include "traceforge/env.hpp"

#include <cctype>
#include <fstream>

namespace traceforge {

void SimWorldSpec::validate() const {
    if (pages.empty()) throw ConfigError("world has no pages");
    if (pages.find(start_page) == pages.end()) {
        throw ConfigError("start_page '" + start_page + "' is not a page");
    }
    for (const auto& [key, target] : transitions) {
        const auto& [page_id, widget_id] = key;
        auto page = pages.find(page_id);
        if (page == pages.end()) {
            throw ConfigError("transition source page '" + page_id + "' is not a page");
        }
        if (pages.find(target) == pages.end()) {
            throw ConfigError("transition target '" + target + "' is not a page");
        }
        bool widget_known = false;
        for (const auto& w : page->second.widgets) {
            if (w.widget_id == widget_id) { widget_known = true; break; }
        }
        if (!widget_known) {
            throw ConfigError("transition widget '" + widget_id + "' not on page '" + page_id + "'");
        }
    }
}

bool SimWorldSpec::has_outgoing(const std::string& page_id) const {
    auto it = transitions.lower_bound({page_id, ""});
    return it != transitions.end() && it->first.first == page_id;
}

SimWorldSpec SimWorldSpec::from_json(const json& j) {
    SimWorldSpec spec;
    spec.start_page = j.at("start_page").get<std::string>();
    spec.seed = j.value("seed", 0ULL);
    for (const auto& [page_id, pj] : j.at("pages").items()) {
        PageSpec page;
        page.title = pj.at("title").get<std::string>();
        for (const auto& wj : pj.value("widgets", json::array())) {
            page.widgets.push_back(WidgetSpec{
                wj.at("id").get<std::string>(),
                wj.at("kind").get<std::string>(),
                wj.at("label").get<std::string>(),
            });
        }
        spec.pages[page_id] = std::move(page);
    }
    for (const auto& tj : j.value("transitions", json::array())) {
        spec.transitions[{tj.at("page").get<std::string>(), tj.at("widget").get<std::string>()}] =
            tj.at("target").get<std::string>();
    }
    for (const auto& gj : j.value("task_goals", json::array())) {
        spec.task_goals.push_back({gj.at("id").get<std::string>(),
                                   gj.at("predicate").get<std::string>()});
    }
    spec.validate();
    return spec;
}

json SimWorldSpec::to_json() const {
    json pages_j = json::object();
    for (const auto& [page_id, page] : pages) {
        json widgets = json::array();
        for (const auto& w : page.widgets) {
            widgets.push_back({{"id", w.widget_id}, {"kind", w.kind}, {"label", w.label}});
        }
        pages_j[page_id] = {{"title", page.title}, {"widgets", widgets}};
    }
    json transitions_j = json::array();
    for (const auto& [key, target] : transitions) {
        transitions_j.push_back({{"page", key.first}, {"widget", key.second}, {"target", target}});
    }
    json goals_j = json::array();
    for (const auto& g : task_goals) {
        goals_j.push_back({{"id", g.goal_id}, {"predicate", g.predicate}});
    }
    return {{"start_page", start_page}, {"seed", seed}, {"pages", pages_j},
            {"transitions", transitions_j}, {"task_goals", goals_j}};
}

SimWorldSpec load_world(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open world file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid world JSON in " + path + ": " + e.what());
    }
    return SimWorldSpec::from_json(j);
}

std::string render_page_observation(const SimWorldSpec& spec, const std::string& page_id) {
    auto it = spec.pages.find(page_id);
    if (it == spec.pages.end()) throw RangeError("unknown page: " + page_id);
    std::string out = "[" + page_id + "] page '" + it->second.title + "'";
    for (const auto& w : it->second.widgets) {
        out += "\n  [" + w.widget_id + "] " + w.kind + " '" + w.label + "'";
    }
    return out;
}

std::optional<std::string> parse_click_target(const std::string& raw) {
    size_t i = 0;
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    static const std::string kVerb = "click";
    if (raw.size() - i < kVerb.size()) return std::nullopt;
    for (size_t k = 0; k < kVerb.size(); ++k) {
        if (std::tolower(static_cast<unsigned char>(raw[i + k])) != kVerb[k]) return std::nullopt;
    }
    i += kVerb.size();
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    if (i >= raw.size() || raw[i] != '[') return std::nullopt;
    size_t close = raw.find(']', i + 1);
    if (close == std::string::npos) return std::nullopt;
    return raw.substr(i + 1, close - i - 1);
}

SimEnv::SimEnv(SimWorldSpec spec, std::string env_id)
    : spec_(std::move(spec)), id_(std::move(env_id)), current_page_(spec_.start_page) {
    spec_.validate();
}

Observation SimEnv::reset() {
    current_page_ = spec_.start_page;
    steps_ = 0;
    stop_recorded_ = false;
    return get_observation();
}

Observation SimEnv::get_observation() const {
    return Observation{render_page_observation(spec_, current_page_), steps_};
}

Observation SimEnv::execute(const Action& action) {
    if (action.kind != ActionKind::Command) {
        throw PreconditionError("execute requires a command action");
    }
    if (finished()) {
        throw LifecycleError("execute on a finished environment");
    }
    auto target = parse_click_target(action.raw);
    if (target) {
        auto it = spec_.transitions.find({current_page_, *target});
        if (it != spec_.transitions.end()) {
            current_page_ = it->second;
        }
    }
    // Unknown widgets and unparseable commands fall through as no-ops; the
    // step counter still advances because an action was executed.
    ++steps_;
    return get_observation();
}

bool SimEnv::finished() const {
    return stop_recorded_ || !spec_.has_outgoing(current_page_);
}

void SimEnv::record_stop() {
    stop_recorded_ = true;
}

int SimEnv::step_counter() const {
    return steps_;
}

const std::string& SimEnv::env_id() const {
    return id_;
}

}  // namespace traceforge
