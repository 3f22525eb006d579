#ifndef FTHRESH_PARALLEL_HPP
#define FTHRESH_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fthresh {

/// Worker count used when callers pass 0: $FTHRESH_THREADS, else hardware concurrency.
int default_threads();

/**
 * Run `fn(worker, begin, end)` over contiguous chunks of [0, num_tasks) on at
 * most `num_workers` threads. Each task index is visited exactly once; callers
 * write to disjoint slots, so results do not depend on the schedule.
 * The first exception thrown by any worker is rethrown on the calling thread.
 */
template<class Fn>
void parallel_for(int num_workers, std::size_t num_tasks, Fn&& fn) {
    if (num_workers <= 0) {
        num_workers = default_threads();
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(num_workers), num_tasks);
    if (workers <= 1) {
        if (num_tasks > 0) {
            fn(std::size_t{0}, std::size_t{0}, num_tasks);
        }
        return;
    }

    const std::size_t per = num_tasks / workers;
    const std::size_t extra = num_tasks % workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr failure;
    std::mutex failure_lock;

    std::size_t start = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t len = per + (w < extra ? 1 : 0);
        pool.emplace_back([&, w, start, len]() {
            try {
                fn(w, start, start + len);
            } catch (...) {
                std::lock_guard<std::mutex> guard(failure_lock);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
        start += len;
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}

#endif
