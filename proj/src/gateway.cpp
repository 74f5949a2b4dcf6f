#include "traceforge/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"

namespace traceforge {

const std::string& ScriptedMockTable::lookup(const std::string& prompt) const {
    for (const auto& rule : rules) {
        if (prompt.find(rule.match) != std::string::npos) return rule.response;
    }
    return default_response;
}

ScriptedMockTable ScriptedMockTable::from_json(const json& j) {
    ScriptedMockTable table;
    for (const auto& rj : j.value("rules", json::array())) {
        table.rules.push_back(MockRule{rj.at("match").get<std::string>(),
                                       rj.at("response").get<std::string>()});
    }
    table.default_response = j.value("default_response", std::string{});
    return table;
}

ScriptedMockTable ScriptedMockTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock table: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid mock table JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

std::string MockProvider::complete(const CompletionRequest& request) {
    return table_.lookup(request.prompt);
}

json provider_config_to_json(const ProviderConfig& config) {
    return {{"endpoint_url", config.endpoint_url},
            {"credentials_env_var", config.credentials_env_var},
            {"timeout_ms", config.timeout_ms},
            {"max_retries", config.max_retries},
            {"requests_per_minute", config.requests_per_minute},
            {"initial_backoff_ms", config.initial_backoff_ms}};
}

ProviderConfig provider_config_from_json(const json& j) {
    ProviderConfig config;
    config.endpoint_url = j.value("endpoint_url", std::string{});
    config.credentials_env_var = j.value("credentials_env_var", std::string{});
    config.timeout_ms = j.value("timeout_ms", 30000);
    config.max_retries = j.value("max_retries", 3);
    config.requests_per_minute = j.value("requests_per_minute", 60);
    config.initial_backoff_ms = j.value("initial_backoff_ms", 100);
    return config;
}

TokenBucket::TokenBucket(int per_minute)
    : tokens_(std::max(per_minute, 1)),
      capacity_(std::max(per_minute, 1)),
      refill_per_ms_(capacity_ / 60000.0),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        double elapsed_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(now - last_).count();
        tokens_ = std::min(capacity_, tokens_ + elapsed_ms * refill_per_ms_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        double wait_ms = (1.0 - tokens_) / refill_per_ms_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(wait_ms) + 1));
        lock.lock();
    }
}

HttpProvider::HttpProvider(ProviderConfig config)
    : config_(std::move(config)), bucket_(config_.requests_per_minute) {}

std::string HttpProvider::complete(const CompletionRequest& request) {
    bucket_.acquire();

    std::string url = config_.endpoint_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint_url must include a scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    std::string host = url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(host);
    client.set_connection_timeout(0, config_.timeout_ms * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

    httplib::Headers headers;
    if (!config_.credentials_env_var.empty()) {
        const char* key = std::getenv(config_.credentials_env_var.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("credentials env var " + config_.credentials_env_var + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body = {{"model", request.model_id},
                 {"prompt", request.prompt},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_output_tokens}};

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError("no response from " + host + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw ConfigError("authentication rejected by provider (status " +
                          std::to_string(res->status) + ")");
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("provider returned status " + std::to_string(res->status));
    }

    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::exception& e) {
        throw TransportError(std::string("provider response is not JSON: ") + e.what());
    }
    if (parsed.contains("choices") && parsed["choices"].is_array() && !parsed["choices"].empty()) {
        const auto& first = parsed["choices"][0];
        if (first.contains("text")) return first["text"].get<std::string>();
        if (first.contains("message") && first["message"].contains("content")) {
            return first["message"]["content"].get<std::string>();
        }
    }
    if (parsed.contains("text")) return parsed["text"].get<std::string>();
    throw TransportError("provider response has no completion text");
}

std::string complete(const CompletionRequest& request, Provider& provider, int max_retries,
                     int initial_backoff_ms) {
    if (request.prompt.empty()) {
        throw PreconditionError("completion prompt must be non-empty");
    }
    int backoff_ms = std::max(initial_backoff_ms, 0);
    for (int attempt = 0;; ++attempt) {
        try {
            return provider.complete(request);
        } catch (const TransportError&) {
            if (attempt >= max_retries) throw;
            if (backoff_ms > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            }
            backoff_ms *= 2;
        }
    }
}

}  // namespace traceforge
