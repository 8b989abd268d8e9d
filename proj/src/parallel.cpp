#include "msopt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace msopt {

std::size_t thread_count() {
  if (const char* env = std::getenv("MSOPT_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void for_each_chunk(std::size_t n, std::size_t chunk_size,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  const std::size_t chunks = chunk_count(n, chunk_size);
  const std::size_t workers = std::min(thread_count(), chunks);
  auto run = [&](std::size_t c) { body(c, c * chunk_size, std::min(n, (c + 1) * chunk_size)); };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) run(c);
  };
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
}

}  // namespace msopt
