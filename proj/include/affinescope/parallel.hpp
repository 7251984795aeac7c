#pragma once

#include "affinescope/core.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace afs {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index must write only
/// its own output slot; callers reduce afterwards in index order, so results do not depend
/// on the thread count. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(Index count, int threads, Fn&& fn) {
    const int workers = static_cast<int>(std::min<Index>(std::max(threads, 1), std::max<Index>(count, 1)));
    if (workers <= 1) {
        for (Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        try {
            for (Index i = next++; i < count; i = next++) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            next = count;
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Pairwise sum in a fixed order (independent of how the terms were produced).
inline double pairwise_sum(const double* data, Index count) {
    if (count <= 8) {
        double acc = 0.0;
        for (Index i = 0; i < count; ++i) acc += data[i];
        return acc;
    }
    const Index half = count / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

inline double pairwise_sum(const std::vector<double>& data) {
    return pairwise_sum(data.data(), static_cast<Index>(data.size()));
}

}  // namespace afs
