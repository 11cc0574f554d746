#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace silfdtd::detail {

/// Split [begin, end) into `workers` contiguous chunks and run fn(lo, hi) on
/// each. Chunks never overlap, so any per-element work is race-free and the
/// result does not depend on the worker count.
template <typename Fn>
void parallel_for(int begin, int end, int workers, Fn&& fn) {
  const int count = end - begin;
  if (count <= 0) return;
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    fn(begin, end);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  const int chunk = count / workers;
  const int extra = count % workers;
  int lo = begin;
  for (int w = 0; w < workers; ++w) {
    const int hi = lo + chunk + (w < extra ? 1 : 0);
    if (w + 1 == workers) {
      fn(lo, hi);
    } else {
      threads.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    lo = hi;
  }
}

}  // namespace silfdtd::detail
