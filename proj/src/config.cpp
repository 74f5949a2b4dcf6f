#include "traceforge/config.hpp"

#include <filesystem>
#include <fstream>

namespace traceforge {

namespace {

namespace fs = std::filesystem;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) { known = true; break; }
        }
        if (!known) throw ConfigError("unknown config key " + where + "." + it.key());
    }
}

std::string resolve(const std::string& path, const std::string& base_dir) {
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

void PipelineConfig::validate() const {
    synthesis.validate();
    runtime.validate();
    if (retrieval.m1 < 0 || retrieval.m2 < 0) throw ConfigError("retrieval caps must be >= 0");
    if (retrieval.k1 < 0.0 || retrieval.b < 0.0 || retrieval.b > 1.0) {
        throw ConfigError("retrieval needs k1 >= 0 and 0 <= b <= 1");
    }
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (provider != "mock" && providers.find(provider) == providers.end()) {
        throw ConfigError("provider '" + provider + "' is not configured");
    }
    if (provider == "mock" && paths.mock_table.empty()) {
        throw ConfigError("mock provider needs paths.mock_table");
    }
}

json PipelineConfig::semantic_json() const {
    json kinds = json::array();
    for (auto kind : synthesis.kinds) kinds.push_back(to_string(kind));
    json providers_j = json::object();
    for (const auto& [name, pc] : providers) providers_j[name] = provider_config_to_json(pc);
    return {{"seed", seed},
            {"provider", provider},
            {"providers", providers_j},
            {"synthesis",
             {{"instructions_per_doc", synthesis.instructions_per_doc},
              {"max_steps", synthesis.max_steps},
              {"kinds", kinds},
              {"keep_original", synthesis.keep_original}}},
            {"committee", {{"members", committee.members}}},
            {"retrieval",
             {{"k1", retrieval.k1}, {"b", retrieval.b},
              {"m1", retrieval.m1}, {"m2", retrieval.m2}}},
            {"runtime",
             {{"max_steps", runtime.max_steps},
              {"m1", runtime.m1},
              {"m2", runtime.m2},
              {"context_budget_tokens", runtime.context_budget_tokens},
              {"mode", to_string(runtime.mode)},
              {"system_message", runtime.system_message}}}};
}

PipelineConfig PipelineConfig::from_json(const json& j, const std::string& base_dir) {
    reject_unknown(j, {"paths", "synthesis", "committee", "retrieval", "runtime", "providers",
                       "provider", "seed", "jobs"},
                   "config");
    PipelineConfig config;

    if (j.contains("paths")) {
        const json& p = j["paths"];
        reject_unknown(p, {"docs", "world", "out_dir", "mock_table"}, "paths");
        config.paths.docs = resolve(p.value("docs", std::string{}), base_dir);
        config.paths.world = resolve(p.value("world", std::string{}), base_dir);
        config.paths.out_dir = resolve(p.value("out_dir", std::string{"out"}), base_dir);
        config.paths.mock_table = resolve(p.value("mock_table", std::string{}), base_dir);
    }

    if (j.contains("synthesis")) {
        const json& s = j["synthesis"];
        reject_unknown(s, {"instructions_per_doc", "max_steps", "kinds", "keep_original"},
                       "synthesis");
        config.synthesis.instructions_per_doc =
            s.value("instructions_per_doc", config.synthesis.instructions_per_doc);
        config.synthesis.max_steps = s.value("max_steps", config.synthesis.max_steps);
        if (s.contains("kinds")) {
            config.synthesis.kinds.clear();
            for (const auto& k : s["kinds"]) {
                config.synthesis.kinds.insert(instruction_kind_from_string(k.get<std::string>()));
            }
        }
        config.synthesis.keep_original = s.value("keep_original", false);
    }

    if (j.contains("committee")) {
        reject_unknown(j["committee"], {"members"}, "committee");
        config.committee.members =
            j["committee"].value("members", std::vector<std::string>{});
    }

    if (j.contains("retrieval")) {
        const json& r = j["retrieval"];
        reject_unknown(r, {"k1", "b", "m1", "m2"}, "retrieval");
        config.retrieval.k1 = r.value("k1", config.retrieval.k1);
        config.retrieval.b = r.value("b", config.retrieval.b);
        config.retrieval.m1 = r.value("m1", config.retrieval.m1);
        config.retrieval.m2 = r.value("m2", config.retrieval.m2);
    }

    if (j.contains("runtime")) {
        const json& r = j["runtime"];
        reject_unknown(r, {"max_steps", "m1", "m2", "context_budget_tokens", "mode",
                           "system_message"},
                       "runtime");
        config.runtime.max_steps = r.value("max_steps", config.runtime.max_steps);
        config.runtime.m1 = r.value("m1", config.runtime.m1);
        config.runtime.m2 = r.value("m2", config.runtime.m2);
        config.runtime.context_budget_tokens =
            r.value("context_budget_tokens", config.runtime.context_budget_tokens);
        if (r.contains("mode")) {
            config.runtime.mode = agent_mode_from_string(r["mode"].get<std::string>());
        }
        config.runtime.system_message = r.value("system_message", config.runtime.system_message);
    }

    if (j.contains("providers")) {
        for (const auto& [name, pj] : j["providers"].items()) {
            reject_unknown(pj, {"endpoint_url", "credentials_env_var", "timeout_ms", "max_retries",
                                "requests_per_minute", "initial_backoff_ms"},
                           "providers." + name);
            config.providers[name] = provider_config_from_json(pj);
        }
    }

    config.provider = j.value("provider", std::string{"mock"});
    config.seed = j.value("seed", 0ULL);
    config.synthesis.seed = config.seed;
    config.jobs = j.value("jobs", 1);
    return config;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    std::string base_dir = std::filesystem::path(path).parent_path().string();
    return PipelineConfig::from_json(j, base_dir);
}

OutLayout OutLayout::in(const std::string& out_dir) {
    namespace fs = std::filesystem;
    auto at = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    OutLayout layout;
    layout.raw_trajectories = at("raw_trajectories.jsonl");
    layout.examples = at("examples.jsonl");
    layout.filtered_examples = at("examples.filtered.jsonl");
    layout.filter_report = at("filter_report.json");
    layout.sparse_index = at("examples.index.sparse.json");
    layout.dense_index = at("examples.index.dense.json");
    layout.sft = at("sft.jsonl");
    layout.manifest = at("manifest.json");
    layout.trace = at("trace.jsonl");
    return layout;
}

}  // namespace traceforge
