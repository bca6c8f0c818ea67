#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace htc {

// Runs fn(0..n-1) over `parallelism` workers. fn must not throw; callers
// capture per-index errors themselves so results stay index-addressed and
// order-independent.
template <typename Fn>
void parallel_indexed(std::size_t n, unsigned parallelism, Fn&& fn) {
  if (n == 0) return;
  if (parallelism <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(parallelism, n));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace htc
