#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace ppr {

// Global worker-count knob. 1 = fully sequential. All parallel loops in this
// library write disjoint output ranges, so results are identical for any
// worker count.
inline std::atomic<int>& worker_count() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_workers(int n) { worker_count().store(n < 1 ? 1 : n); }

// Runs fn(i) for i in [begin, end), chunked over the configured workers.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
    const std::size_t count = end > begin ? end - begin : 0;
    int workers = worker_count().load();
    if (workers > 1 && count > 1) {
        const std::size_t w = std::min<std::size_t>(workers, count);
        std::vector<std::thread> pool;
        pool.reserve(w);
        const std::size_t chunk = (count + w - 1) / w;
        for (std::size_t t = 0; t < w; ++t) {
            const std::size_t lo = begin + t * chunk;
            const std::size_t hi = std::min(end, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([lo, hi, &fn] {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            });
        }
        for (auto& th : pool) th.join();
        return;
    }
    for (std::size_t i = begin; i < end; ++i) fn(i);
}

}  // namespace ppr
