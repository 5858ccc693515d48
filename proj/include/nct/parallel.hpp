#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace nct {

// Runs fn(task_index) for task_index in [0, n_tasks) on up to `threads`
// workers.  Each task writes only its own slot, so results are independent of
// scheduling; the first exception thrown by any task is rethrown.
template <typename Fn>
void parallel_tasks(std::int64_t n_tasks, int threads, Fn&& fn) {
    if (n_tasks <= 0) return;
    if (threads < 1) threads = 1;
    const int workers = static_cast<int>(std::min<std::int64_t>(threads, n_tasks));
    if (workers == 1) {
        for (std::int64_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }

    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n_tasks) break;
                try {
                    fn(i);
                } catch (...) {
                    bool expected = false;
                    if (failed.compare_exchange_strong(expected, true))
                        first_error = std::current_exception();
                    break;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nct
