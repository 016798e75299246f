#pragma once

#include <atomic>
#include <cstdlib>
#include <cstddef>
#include <thread>
#include <vector>

namespace blackstock::detail {

inline int thread_count() {
  if (const char* env = std::getenv("BLACKSTOCK_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? (int)hw : 1;
}

// Deterministic parallel map: f(i) must write only to slot i of some
// preallocated output, so results never depend on the thread count.
template <class F>
void parallel_for(std::size_t count, F&& f) {
  int nt = thread_count();
  if (nt <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      f(i);
    }
  };
  std::vector<std::thread> pool;
  int spawn = (int)std::min<std::size_t>(nt, count);
  pool.reserve(spawn - 1);
  for (int t = 0; t < spawn - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace blackstock::detail
