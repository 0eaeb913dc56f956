#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tanpano {

/// Runs body(i) for i in [0, count) on up to `jobs` threads using contiguous
/// chunks. Callers write results to disjoint slots, so output is independent
/// of the job count. The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(int count, int jobs, Body&& body)
{
    jobs = std::clamp(jobs, 1, std::max(1, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (int j = 0; j < jobs; ++j) {
        const int begin = static_cast<int>(static_cast<long long>(count) * j / jobs);
        const int end = static_cast<int>(static_cast<long long>(count) * (j + 1) / jobs);
        workers.emplace_back([&, begin, end] {
            try {
                for (int i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    workers.clear();
    if (error) std::rethrow_exception(error);
}

inline int default_jobs()
{
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

} // namespace tanpano
