#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace bohm {

/// Worker count used by parallel maps; defaults to BOHM_THREADS or 1.
int thread_count();
void set_thread_count(int threads);

/// Calls fn(i) for i in [0, count) on contiguous chunks. fn must only write
/// to slots owned by index i, so results never depend on the schedule.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, thread_count())), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
}

}  // namespace bohm
