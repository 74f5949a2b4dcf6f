#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

namespace traceforge {

/// Writes one structured log record (a single JSON line) to `out`.
/// Safe to call from multiple threads; no-op when out is null.
void log_event(std::ostream* out, std::string_view event, nlohmann::json fields = nlohmann::json::object());

/// Runs fn(0..count-1) across up to `jobs` worker threads. Completion order
/// is arbitrary; callers that need ordered output should write results into
/// a pre-sized vector indexed by i. The first exception, if any, is
/// rethrown after all workers join.
void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn);

/// FNV-1a 64-bit hash, used for config fingerprints.
uint64_t fnv1a64(std::string_view data);

/// Lowercase hex of fnv1a64.
std::string fnv1a64_hex(std::string_view data);

/// 12,345 -> "12,345"; used by the stats table.
std::string format_with_commas(long long value);

}  // namespace traceforge
