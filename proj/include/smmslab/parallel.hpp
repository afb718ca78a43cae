#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace smmslab {

// Worker count: hardware concurrency capped by the SMMS_LAB_THREADS
// environment variable (values < 1 mean serial).
inline int thread_cap() {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("SMMS_LAB_THREADS")) {
    const int req = std::atoi(env);
    if (req >= 1) cap = std::min(cap, req);
  }
  return cap;
}

// Runs fn(i) for i in [0, n) on up to thread_cap() workers.  fn must be safe
// to call concurrently for distinct indices; iteration order is unspecified.
template <typename Fn>
inline void parallel_for(int n, Fn&& fn) {
  const int workers = std::min(thread_cap(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& t : pool) t.join();
}

}  // namespace smmslab
