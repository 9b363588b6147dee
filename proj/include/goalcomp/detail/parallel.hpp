#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace goalcomp::detail {

inline int worker_count() {
  if (const char* env = std::getenv("GOALCOMP_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Runs fn(chunk_index, begin, end) over [0, count) in fixed-size chunks.
// Chunk boundaries are independent of the worker count, so callers that
// accumulate one partial result per chunk and combine them in chunk order get
// arithmetic that does not depend on how many threads ran.
template <class Fn>
void for_chunks(std::int64_t count, std::int64_t chunk_size, Fn&& fn) {
  if (count <= 0) return;
  const std::int64_t n_chunks = (count + chunk_size - 1) / chunk_size;
  const int workers =
      static_cast<int>(std::min<std::int64_t>(worker_count(), n_chunks));
  auto run_chunk = [&](std::int64_t c) {
    const std::int64_t begin = c * chunk_size;
    const std::int64_t end = std::min(count, begin + chunk_size);
    fn(c, begin, end);
  };
  if (workers <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      run_chunk(c);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

inline constexpr std::int64_t kChunk = 64;

}  // namespace goalcomp::detail
