#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "traceforge/core.hpp"

namespace traceforge {

struct CompletionRequest {
    std::string prompt;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    std::string model_id;
};

/// Uniform completion interface. Implementations must be safe to call from
/// multiple threads.
class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

struct MockRule {
    std::string match;     // substring over the prompt
    std::string response;
};

/// Ordered scripted responses for offline runs: the first rule whose match
/// string occurs in the prompt wins; otherwise default_response.
struct ScriptedMockTable {
    std::vector<MockRule> rules;
    std::string default_response;

    const std::string& lookup(const std::string& prompt) const;

    static ScriptedMockTable from_json(const json& j);
    static ScriptedMockTable load(const std::string& path);
};

/// Deterministic, lock-free provider over a ScriptedMockTable.
class MockProvider : public Provider {
public:
    explicit MockProvider(ScriptedMockTable table) : table_(std::move(table)) {}
    std::string complete(const CompletionRequest& request) override;

private:
    const ScriptedMockTable table_;
};

struct ProviderConfig {
    std::string endpoint_url;
    std::string credentials_env_var;  // name only; the value is never stored
    int timeout_ms = 30000;
    int max_retries = 3;
    int requests_per_minute = 60;
    int initial_backoff_ms = 100;
};

/// Serializes a ProviderConfig for fingerprints and diagnostics. The
/// credential value is read from the environment at call sites and never
/// appears here.
json provider_config_to_json(const ProviderConfig& config);
ProviderConfig provider_config_from_json(const json& j);

/// Blocks callers so that at most requests_per_minute acquisitions happen
/// per minute.
class TokenBucket {
public:
    explicit TokenBucket(int per_minute);
    void acquire();

private:
    std::mutex mutex_;
    double tokens_;
    double capacity_;
    double refill_per_ms_;
    std::chrono::steady_clock::time_point last_;
};

/// HTTPS JSON provider. Sends {model, prompt, temperature, max_tokens} to
/// the configured endpoint with a bearer token from the named environment
/// variable, and accepts the common completion response shapes. One call
/// is one attempt; retry policy lives in complete() below.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(ProviderConfig config);
    std::string complete(const CompletionRequest& request) override;

private:
    ProviderConfig config_;
    TokenBucket bucket_;
};

/// Completes `request` against `provider`, retrying transient transport
/// errors with exponential backoff up to max_retries extra attempts.
/// Configuration errors (e.g. bad credentials) are not retried. Throws
/// PreconditionError for an empty prompt.
std::string complete(const CompletionRequest& request, Provider& provider, int max_retries = 3,
                     int initial_backoff_ms = 100);

}  // namespace traceforge
