#include "traceforge/util.hpp"

#include <algorithm>
#include <exception>

namespace traceforge {

namespace {
std::mutex g_log_mutex;
}

void log_event(std::ostream* out, std::string_view event, nlohmann::json fields) {
    if (out == nullptr) return;
    fields["event"] = std::string(event);
    std::lock_guard<std::mutex> lock(g_log_mutex);
    (*out) << fields.dump() << "\n";
}

void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn) {
    if (count == 0) return;
    size_t workers = std::min<size_t>(std::max(jobs, 1), count);
    if (workers <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view data) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a64(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string format_with_commas(long long value) {
    std::string digits = std::to_string(value < 0 ? -value : value);
    std::string out;
    int run = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (run > 0 && run % 3 == 0) out.push_back(',');
        out.push_back(*it);
        ++run;
    }
    if (value < 0) out.push_back('-');
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace traceforge
