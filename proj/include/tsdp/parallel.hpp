#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsdp {

/// Runs body(i) for i in [0, count) on up to `threads` threads. Each index is
/// handled exactly once; callers write results by index so output order never
/// depends on scheduling. The first exception thrown by any body is rethrown.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    pool.clear();
    if (error)
        std::rethrow_exception(error);
}

} // namespace tsdp
