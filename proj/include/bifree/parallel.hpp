#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace bifree {

// Thread cap from BIFREE_THREADS (0 or unset = hardware concurrency).
inline unsigned thread_limit() {
    if (const char* env = std::getenv("BIFREE_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Static block partition of [0, n); body(i) must be pure in shared state.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    unsigned nthreads = thread_limit();
    if (nthreads <= 1 || n < 2 * nthreads) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(nthreads);
    std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (unsigned t = 0; t < nthreads; ++t) {
        std::size_t lo = t * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (std::thread& w : workers) w.join();
}

}  // namespace bifree
