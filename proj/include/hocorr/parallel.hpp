#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace hocorr {

inline int hardware_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Static chunked parallel loop over [0, count). The worker must not touch
// shared mutable state except slots it owns (e.g. out[i]). The first
// exception thrown by any worker is rethrown after all threads join.
inline void parallel_for(long count, int threads, const std::function<void(long)>& body) {
    if (count <= 0) return;
    if (threads < 1) threads = 1;
    if (threads == 1 || count == 1) {
        for (long i = 0; i < count; ++i) body(i);
        return;
    }
    threads = static_cast<int>(std::min<long>(threads, count));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const long chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long begin = t * chunk;
        const long end = std::min(count, begin + chunk);
        pool.emplace_back([&, t, begin, end] {
            try {
                for (long i = begin; i < end; ++i) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace hocorr
