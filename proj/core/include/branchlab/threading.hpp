#pragma once

#include <cstddef>
#include <functional>

namespace branchlab {

// Resolved thread count: explicit request, else BRANCHLAB_THREADS, else 1.
unsigned resolve_threads(unsigned requested);

// Runs fn(begin, end, chunk_index) over a fixed partition of [0, n) into
// kChunkCount contiguous chunks handed to workers via an atomic cursor.
// The partition does not depend on the thread count, so per-chunk
// accumulations merged in chunk order are byte-identical for any number of
// threads.
inline constexpr std::size_t kChunkCount = 128;

void parallel_chunks(std::size_t n, unsigned threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace branchlab
