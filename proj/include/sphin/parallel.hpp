#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace sphin {

// Worker cap shared by all parallel loops. 0 means "not set yet": the first
// query resolves it from SPH_INPAINT_THREADS or the hardware concurrency.
inline int& thread_count_storage() {
  static int n = 0;
  return n;
}

inline void set_thread_count(int n) { thread_count_storage() = std::max(1, n); }

inline int thread_count() {
  int& n = thread_count_storage();
  if (n == 0) {
    if (const char* env = std::getenv("SPH_INPAINT_THREADS")) {
      n = std::max(1, std::atoi(env));
    } else {
      n = std::max(1u, std::thread::hardware_concurrency());
    }
  }
  return n;
}

// Chunked parallel map over [0, n). The body must be pure per index
// (disjoint writes only); chunk boundaries are deterministic for a fixed
// thread count, and results never depend on the split.
template <class Fn>
void parallel_for(std::int64_t n, const Fn& fn) {
  const int workers = std::min<std::int64_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const std::int64_t lo = t * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace sphin
