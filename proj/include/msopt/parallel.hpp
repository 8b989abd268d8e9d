#pragma once

#include <cstddef>
#include <functional>

namespace msopt {

/// Worker cap: MSOPT_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs body(chunk_index, begin, end) over [0, n) split into fixed-size
/// chunks. The chunk layout depends only on n and chunk_size, never on the
/// number of threads, so callers that reduce per-chunk partials in chunk order
/// get bitwise identical results for any thread count.
void for_each_chunk(std::size_t n, std::size_t chunk_size,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

}  // namespace msopt
