#pragma once

#include <thread>
#include <vector>

namespace splatalign {

// Runs fn(i) for i in [0, count). Work is split into contiguous chunks so
// every index is owned by exactly one worker; callers that need deterministic
// reductions accumulate per-index results and fold them in index order
// afterwards. threads <= 1 runs inline.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::size_t n_workers = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    std::size_t chunk = (count + n_workers - 1) / n_workers;
    for (std::size_t w = 0; w < n_workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return int(hw == 0 ? 1 : (hw > 8 ? 8 : hw));
}

}  // namespace splatalign
