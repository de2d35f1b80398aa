#pragma once

#include <atomic>
#include <thread>
#include <vector>

namespace prefalign {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Callers write
/// results into index-addressed slots and aggregate in index order afterwards,
/// so the outcome never depends on scheduling.
template <typename F>
void parallel_for(int n, int workers, F&& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> cursor{0};
  auto worker = [&] {
    for (;;) {
      const int i = cursor.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  const int count = std::min(workers, n);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
}

}  // namespace prefalign
