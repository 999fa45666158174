#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wsnod {

/// 0 or negative means one job per hardware thread.
inline int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, n) on up to `jobs` threads. The first exception thrown is rethrown.
template <typename Body>
void parallel_for(std::size_t n, int jobs, Body&& body) {
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(resolve_jobs(jobs)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run);
    run();
    threads.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace wsnod
