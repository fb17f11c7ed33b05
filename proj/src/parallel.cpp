#include "netforge/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace netforge {

std::size_t thread_cap() {
  std::size_t cap = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NETFORGE_THREADS")) {
    try {
      const long requested = std::stol(env);
      if (requested >= 1) cap = std::min(cap, static_cast<std::size_t>(requested));
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return cap;
}

void parallel_chunks(std::size_t count, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t chunks = chunk_count(count, chunk_size);
  const std::size_t workers = std::min(thread_cap(), chunks);
  auto run = [&](std::size_t chunk) {
    const std::size_t begin = chunk * chunk_size;
    fn(chunk, begin, std::min(count, begin + chunk_size));
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks; c = next++) run(c);
    });
  }
}

}  // namespace netforge
