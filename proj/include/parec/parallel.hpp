#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace parec::par {

inline unsigned& thread_count_ref() {
    static unsigned count = std::max(1u, std::thread::hardware_concurrency());
    return count;
}

inline void set_threads(unsigned n) { thread_count_ref() = std::max(1u, n); }
inline unsigned threads() { return thread_count_ref(); }

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// The chunk grid depends only on chunk_size, never on the worker count, so
// callers that accumulate per-chunk results and reduce them in chunk order
// get output that is independent of the number of workers.
template <class Fn>
void run_chunks(std::size_t n, std::size_t chunk_size, Fn&& fn) {
    if (n == 0) return;
    const std::size_t nchunks = (n + chunk_size - 1) / chunk_size;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(threads(), nchunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < nchunks; ++c)
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= nchunks) return;
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

}  // namespace parec::par
