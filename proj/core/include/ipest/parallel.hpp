#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ipest {

/// 0 means one thread per hardware core.
inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1U : hw;
}

/// Calls f(i) for i in [0, count) on up to `threads` workers. Work is handed
/// out dynamically, so f must write only to slot i. If any call throws, the
/// exception from the smallest index is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& f) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(count, 1)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Pairwise summation, independent of thread count.
template <class It>
double pairwise_sum(It first, It last) {
  const auto len = last - first;
  if (len <= 16) {
    double acc = 0.0;
    for (; first != last; ++first) acc += *first;
    return acc;
  }
  It mid = first + len / 2;
  return pairwise_sum(first, mid) + pairwise_sum(mid, last);
}

}  // namespace ipest
