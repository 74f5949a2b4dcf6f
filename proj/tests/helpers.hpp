#pragma once

#include <unistd.h>

#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "traceforge/core.hpp"
#include "traceforge/gateway.hpp"

namespace tf_test {

using namespace traceforge;

/// Returns scripted responses in call order, then repeats the last one.
class SequenceProvider : public Provider {
public:
    explicit SequenceProvider(std::vector<std::string> responses)
        : responses_(std::move(responses)) {}

    std::string complete(const CompletionRequest&) override {
        std::lock_guard<std::mutex> lock(mutex_);
        if (responses_.empty()) throw TransportError("sequence provider has no responses");
        size_t i = std::min(next_, responses_.size() - 1);
        ++next_;
        return responses_[i];
    }

    size_t calls() const { return next_; }

private:
    std::vector<std::string> responses_;
    size_t next_ = 0;
    std::mutex mutex_;
};

/// Answers by model id; used for committee truth tables.
class RoutingProvider : public Provider {
public:
    explicit RoutingProvider(std::map<std::string, std::string> by_model)
        : by_model_(std::move(by_model)) {}

    std::string complete(const CompletionRequest& request) override {
        auto it = by_model_.find(request.model_id);
        if (it == by_model_.end()) throw TransportError("no response for model " + request.model_id);
        return it->second;
    }

private:
    std::map<std::string, std::string> by_model_;
};

/// Wraps a provider and records every prompt it sees.
class RecordingProvider : public Provider {
public:
    explicit RecordingProvider(Provider& inner) : inner_(inner) {}

    std::string complete(const CompletionRequest& request) override {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            prompts.push_back(request.prompt);
        }
        return inner_.complete(request);
    }

    std::vector<std::string> prompts;

private:
    Provider& inner_;
    std::mutex mutex_;
};

/// Fails with TransportError a fixed number of times, then succeeds.
class FlakyProvider : public Provider {
public:
    FlakyProvider(int failures, std::string response)
        : failures_(failures), response_(std::move(response)) {}

    std::string complete(const CompletionRequest&) override {
        ++attempts;
        if (attempts <= failures_) throw TransportError("transient failure");
        return response_;
    }

    int attempts = 0;

private:
    int failures_;
    std::string response_;
};

class AuthFailProvider : public Provider {
public:
    std::string complete(const CompletionRequest&) override {
        ++attempts;
        throw ConfigError("bad credentials");
    }
    int attempts = 0;
};

inline Trajectory make_trajectory(int actions, const std::string& tag = "page") {
    TrajectoryBuilder builder;
    builder.start(tag + " obs 0");
    for (int k = 1; k <= actions; ++k) {
        builder.step("click [" + tag + "_" + std::to_string(k) + "]",
                     tag + " obs " + std::to_string(k));
    }
    return builder.build();
}

inline Example make_example(const std::string& id, const std::string& instruction, int actions) {
    Example example;
    example.id = id;
    example.instruction = instruction;
    example.trajectory = make_trajectory(actions, id);
    example.provenance = Provenance{"doc", "parent", 0, std::max(actions, 1),
                                    InstructionKind::Abstraction};
    example.token_count = example_token_count(instruction, example.trajectory);
    return example;
}

inline Trajectory random_trajectory(std::mt19937_64& rng, int max_actions = 8) {
    std::uniform_int_distribution<int> n_dist(0, max_actions);
    std::uniform_int_distribution<int> word_dist(1, 6);
    auto words = [&](const char* prefix, int count) {
        std::string out;
        for (int w = 0; w < count; ++w) {
            if (w > 0) out += " ";
            out += prefix + std::to_string(rng() % 50);
        }
        return out;
    };
    int n = n_dist(rng);
    TrajectoryBuilder builder;
    builder.start(words("state", word_dist(rng)));
    for (int k = 0; k < n; ++k) {
        builder.step("click [w" + std::to_string(rng() % 20) + "]",
                     words("state", word_dist(rng)));
    }
    return builder.build();
}

/// Unique scratch directory under the system temp root, removed on
/// destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& stem) {
        auto base = std::filesystem::temp_directory_path();
        for (int attempt = 0;; ++attempt) {
            auto candidate = base / (stem + "-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(attempt));
            if (std::filesystem::create_directories(candidate)) {
                path = candidate;
                return;
            }
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace tf_test
