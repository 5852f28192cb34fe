#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace cylgeo::detail {

/// Runs fn(i) for i in [0, count) on up to `threads` threads with a static
/// strided schedule.  fn must only write to slot i of its outputs.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace cylgeo::detail
