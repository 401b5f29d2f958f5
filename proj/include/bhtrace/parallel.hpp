#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace bhtrace {

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, n) on contiguous chunks. fn must only write
/// to slots owned by i.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::size_t nt = std::min<std::size_t>(resolve_threads(threads), n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    std::size_t lo = n * t / nt, hi = n * (t + 1) / nt;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace bhtrace
