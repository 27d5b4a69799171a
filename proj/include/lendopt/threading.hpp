#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lendopt {

inline int default_thread_count() {
    if (const char* env = std::getenv("LENDOPT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
/// Chunking is independent of the thread count, so any reduction keyed by
/// chunk index is reproducible under any parallelism degree.
template <class Fn>
void parallel_chunks(long n, long chunk_size, int threads, Fn&& fn) {
    if (n <= 0) return;
    chunk_size = std::max<long>(1, chunk_size);
    const long n_chunks = (n + chunk_size - 1) / chunk_size;
    threads = std::max(1, std::min<long>(threads, n_chunks) > 0
                              ? static_cast<int>(std::min<long>(threads, n_chunks))
                              : 1);
    if (threads == 1) {
        for (long c = 0; c < n_chunks; ++c)
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const long c = next.fetch_add(1, std::memory_order_relaxed);
                if (c >= n_chunks) return;
                fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace lendopt
