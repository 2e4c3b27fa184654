#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace haarpr {

// Global worker cap, set once by the CLI (--threads). 0 = hardware default.
void set_max_threads(int n);
int max_threads();

// Static block partition of [0, n) across workers. fn(begin, end, worker).
// Deterministic: the partition depends only on n and the resolved thread
// count, never on scheduling.
inline void parallel_blocks(std::size_t n,
                            const std::function<void(std::size_t, std::size_t, int)>& fn,
                            int threads = 0) {
  int t = threads > 0 ? threads : max_threads();
  if (t <= 1 || n < 2) {
    fn(0, n, 0);
    return;
  }
  t = static_cast<int>(std::min<std::size_t>(t, n));
  std::vector<std::thread> pool;
  pool.reserve(t - 1);
  const std::size_t chunk = (n + t - 1) / t;
  for (int w = 1; w < t; ++w) {
    const std::size_t b = std::min(n, w * chunk), e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back(fn, b, e, w);
  }
  fn(0, std::min(n, chunk), 0);
  for (auto& th : pool) th.join();
}

}  // namespace haarpr
