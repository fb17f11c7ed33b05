#pragma once

#include <cstddef>
#include <functional>

namespace netforge {

// Worker cap: hardware concurrency, lowered by NETFORGE_THREADS when set.
std::size_t thread_cap();

// Calls fn(chunk_index, begin, end) for fixed-size chunks of [0, count).
// Chunk boundaries depend only on count and chunk_size, so callers that
// reduce per-chunk partials in chunk order get results independent of the
// number of workers.
void parallel_chunks(std::size_t count, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t count, std::size_t chunk_size) {
  return (count + chunk_size - 1) / chunk_size;
}

}  // namespace netforge
