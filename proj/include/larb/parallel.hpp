#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace larb {

inline int worker_count() {
    if (const char* env = std::getenv("LARB_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, n). Results must be written to index-addressed
/// storage so the outcome does not depend on thread scheduling.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
    const int workers = int(std::min<std::size_t>(std::size_t(worker_count()), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    const std::size_t chunk = (n + std::size_t(workers) - 1) / std::size_t(workers);
    for (int w = 0; w < workers; ++w) {
        const std::size_t begin = std::size_t(w) * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace larb
