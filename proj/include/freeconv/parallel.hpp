#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace freeconv {

// Worker cap: FREECONV_THREADS env var when set, hardware otherwise.
inline int max_threads() {
    if (const char* env = std::getenv("FREECONV_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Runs fn on contiguous index ranges [begin, end). Each range is one
// execution lane, so per-lane state (e.g. warm starts) stays confined.
// Work smaller than min_parallel runs inline.
inline void parallel_for_chunks(std::size_t n,
                                const std::function<void(std::size_t, std::size_t)>& fn,
                                std::size_t min_parallel = 64) {
    const int threads = max_threads();
    if (threads <= 1 || n < std::max<std::size_t>(2, min_parallel)) {
        fn(0, n);
        return;
    }
    const std::size_t lanes = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(lanes);
    pool.reserve(lanes);
    for (std::size_t k = 0; k < lanes; ++k) {
        const std::size_t b = n * k / lanes;
        const std::size_t e = n * (k + 1) / lanes;
        pool.emplace_back([&, k, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace freeconv
