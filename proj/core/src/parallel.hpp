#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace wssl::detail {

/// Run fn(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to disjoint slots; the schedule never affects the output.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = std::min<int>(threads, static_cast<int>(count));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace wssl::detail
