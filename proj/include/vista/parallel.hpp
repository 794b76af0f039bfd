#pragma once

// Deterministic parallel map and reduction.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vista {

/// Number of worker threads to use for a requested count (0 = hardware default).
inline std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Calls fn(i) for i in [0, n) using a static contiguous partition. Each index
/// must write only to its own output slot. The first exception thrown by any
/// worker is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::min(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Fixed-shape pairwise tree sum over items[lo, hi). The association order
/// depends only on the item count, never on thread scheduling.
template <class T, class Add>
T tree_reduce(const std::vector<T>& items, std::size_t lo, std::size_t hi, const Add& add) {
    if (hi - lo == 1) return items[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    T left = tree_reduce(items, lo, mid, add);
    add(left, tree_reduce(items, mid, hi, add));
    return left;
}

}  // namespace vista
