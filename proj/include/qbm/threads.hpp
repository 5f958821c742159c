// threads.hpp — fixed-chunk parallel helpers with thread-count-independent results

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace qbm {

inline unsigned default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

// Runs fn(begin, end) over [0, n) split into contiguous chunks.  Chunk
// boundaries depend only on n, never on the thread count, so reductions that
// combine per-chunk results in chunk order are bitwise reproducible.
inline void parallel_for(std::size_t n, unsigned nthreads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    nthreads = std::max(1u, nthreads);
    if (nthreads == 1 || n < 2) {
        fn(0, n);
        return;
    }
    const std::size_t nchunks = std::min<std::size_t>(n, 4 * nthreads);
    const std::size_t chunk = (n + nchunks - 1) / nchunks;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    // static schedule: thread i takes chunks i, i+nthreads, ...
    for (unsigned ti = 0; ti < nthreads; ++ti) {
        pool.emplace_back([=]() {
            for (std::size_t c = ti; c * chunk < n; c += nthreads) {
                const std::size_t b = c * chunk;
                const std::size_t e = std::min(n, b + chunk);
                fn(b, e);
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace qbm
