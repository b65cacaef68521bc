#include "branchlab/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace branchlab {

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BRANCHLAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

void parallel_chunks(std::size_t n, unsigned threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t chunks = std::min(kChunkCount, n);
    const std::size_t base = n / chunks, rem = n % chunks;
    auto chunk_range = [&](std::size_t c) {
        // First `rem` chunks carry one extra item; boundaries depend only on n.
        const std::size_t lo = c * base + std::min(c, rem);
        const std::size_t hi = lo + base + (c < rem ? 1 : 0);
        return std::pair<std::size_t, std::size_t>(lo, hi);
    };

    threads = std::max(1u, threads);
    if (threads == 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            const auto [lo, hi] = chunk_range(c);
            fn(lo, hi, c);
        }
        return;
    }

    std::atomic<std::size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t c = cursor.fetch_add(1);
            if (c >= chunks) return;
            try {
                const auto [lo, hi] = chunk_range(c);
                fn(lo, hi, c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace branchlab
