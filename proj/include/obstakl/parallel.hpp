#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace obstakl {

/**
 * Deterministic parallel helpers.
 *
 * Results must be bit-identical for any thread count, so work is split into
 * fixed-size chunks whose boundaries do not depend on the number of workers.
 * Chunked map steps may run concurrently (they write disjoint slots); every
 * reduction over chunk results happens sequentially in chunk order.
 */

inline constexpr std::size_t kChunk = 4096;

/** Run fn(i) for i in [0, n). Safe only if iterations write disjoint state. */
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (threads <= 1 || n < 2 * kChunk) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::thread> pool;
  unsigned nw = std::min<std::size_t>(threads, n_chunks);
  // Interleaved chunk assignment; chunk c covers [c*kChunk, min(n,(c+1)*kChunk)).
  for (unsigned w = 0; w < nw; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < n_chunks; c += nw) {
        std::size_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

/**
 * Deterministic sum of per-item contributions: items are mapped into
 * per-chunk partial sums (parallelizable) and the partials are added in
 * chunk order. The result does not depend on the thread count.
 */
inline double parallel_sum(std::size_t n, unsigned threads,
                           const std::function<double(std::size_t)>& term) {
  if (n == 0) return 0.0;
  std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(n_chunks, 0.0);
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    std::size_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[c] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace obstakl
